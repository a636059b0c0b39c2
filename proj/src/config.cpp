#include "chainexit/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include <yaml-cpp/yaml.h>

#include "chainexit/error.hpp"

namespace chainexit::config
{
namespace
{
constexpr std::string_view example = R"(# chainexit configuration; every key is shown with its default.
chain:
  n: 1                    # number of subsystems
  d: 1                    # state dimension of each subsystem
  drifts: [["0"]]         # drifts[i][k]: component k of m_(i+1) in x1..xN and u1..uR
  sigma: [["1"]]          # d x m noise matrix, a function of the first block only
  eps: []                 # regularization of subsystems 2..n (n-1 entries)
  x0: []                  # flattened start point; empty means the box centre
  horizon: 1              # default simulation horizon T
domains:
  lower: [-1]             # flattened lower corners (n*d entries, or one to broadcast)
  upper: [1]              # flattened upper corners
  data:
    kind: indicator       # indicator | expression
    faces: all            # target faces for the indicator, e.g. "x1+,x2-"
    sharpness: 10         # indicator ramp width is 1/sharpness
    expression: "1"       # boundary function of x1..xN when kind = expression
controls:
  values: [[0]]           # values[i]: control set of subsystem i+1 (one set broadcasts)
  policy: smallest        # smallest | optimal | list of constant control indices
  feedback: joint         # joint | own_state
  tie_tol: 1.0e-10        # relative Hamiltonian tie tolerance
grid:
  nodes: [101]            # nodes per axis including boundary (one entry broadcasts)
  level: 0                # level of the grid problem; 0 means n
  eigen_tol: 1.0e-8
  max_iter: 500
  policy_tol: 1.0e-9      # policy iteration stops when lambda changes less
  max_sweeps: 50
  eps_list: [0.2, 0.1, 0.05, 0.025]   # viscosity sweep, strictly decreasing
  inner_fraction: 0.5     # sweep differences taken on this fraction of the box
mc:
  n_paths: 10000
  seed: 0
  dt: 1.0e-3
  horizon: 0              # 0 means chain.horizon
  level: 0                # 0 means n
  exit_event: domain      # domain (leave the product box) | level (leave D_level)
  survival_points: 200
  window: []              # rate fit window [t_lo, t_hi]; empty means [T/2, T]
  threads: 0              # 0 means every core; results do not depend on it
  eps_list: [0.1, 0.01, 0.001, 0.0001]   # couple: strictly decreasing
  rel_tol: 0.05           # crosscheck agreement tolerance
  diagnostic_samples: 256 # validate: sample count per check
output:
  dir: out
  triplets: false         # eigen: also dump the operator as triplets
)";

Json scalar_value(const YAML::Node& node)
{
    const std::string& s = node.Scalar();
    if (node.Tag() == "!")
        return s;
    if (s.empty() || s == "~" || s == "null")
        return nullptr;
    if (s == "true" || s == "True")
        return true;
    if (s == "false" || s == "False")
        return false;
    std::int64_t i = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
    if (ec == std::errc{} && end == s.data() + s.size())
        return i;
    errno = 0;
    char* stop = nullptr;
    double d = std::strtod(s.c_str(), &stop);
    if (stop == s.c_str() + s.size() && errno == 0)
        return d;
    return s;
}

Json to_json(const YAML::Node& node)
{
    switch (node.Type())
    {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Scalar:
            return scalar_value(node);
        case YAML::NodeType::Sequence:
        {
            Json arr = Json::array();
            for (const auto& item : node)
                arr.push_back(to_json(item));
            return arr;
        }
        case YAML::NodeType::Map:
        {
            Json obj = Json::object();
            for (const auto& kv : node)
            {
                auto key = kv.first.as<std::string>();
                if (obj.contains(key))
                    throw ConfigError("duplicate config key '" + key + "'");
                obj[key] = to_json(kv.second);
            }
            return obj;
        }
    }
    return nullptr;
}

Json load_yaml(std::string_view text)
{
    try
    {
        return to_json(YAML::Load(std::string(text)));
    }
    catch (const YAML::Exception& e)
    {
        throw ConfigError("config is not valid YAML: " + std::string(e.what()));
    }
}

std::vector<std::string> split_path(std::string_view path)
{
    std::vector<std::string> parts;
    while (true)
    {
        auto dot = path.find('.');
        parts.emplace_back(path.substr(0, dot));
        if (parts.back().empty())
            throw ConfigError("empty component in config key '" + std::string(path) + "'");
        if (dot == std::string_view::npos)
            break;
        path.remove_prefix(dot + 1);
    }
    return parts;
}

void check_against(const Json& cfg, const Json& schema, const std::string& prefix)
{
    for (auto it = cfg.begin(); it != cfg.end(); ++it)
    {
        std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!schema.contains(it.key()))
            throw ConfigError("unknown config key '" + key + "'");
        const Json& ref = schema.at(it.key());
        if (ref.is_object())
        {
            if (!it->is_object())
                throw ConfigError("config key '" + key + "' must be a section");
            check_against(*it, ref, key);
        }
        else if (it->is_object())
        {
            throw ConfigError("config key '" + key + "' is not a section");
        }
    }
}

void merge_into(Json& base, const Json& over)
{
    for (auto it = over.begin(); it != over.end(); ++it)
    {
        if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object())
            merge_into(base[it.key()], *it);
        else
            base[it.key()] = *it;
    }
}

[[noreturn]] void type_error(std::string_view path, const char* what)
{
    throw ConfigError("config key '" + std::string(path) + "' must be " + what);
}

double as_number(const Json& v, std::string_view path)
{
    if (!v.is_number())
        type_error(path, "a number");
    return v.get<double>();
}

std::size_t as_count(const Json& v, std::string_view path)
{
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))
        return v.get<std::size_t>();
    if (v.is_number_float())
    {
        double d = v.get<double>();
        if (d >= 0 && std::floor(d) == d && d < 1e18)
            return static_cast<std::size_t>(d);
    }
    type_error(path, "a nonnegative integer");
}

std::string as_expression(const Json& v, std::string_view path)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_number())
        return v.dump();
    type_error(path, "an expression string");
}

//! Accepts a list, or a scalar standing for a one-element list.
Json listify(const Json& v)
{
    return v.is_array() ? v : Json::array({v});
}
}  // namespace

//---------------------------------------------------------------------------//
std::string_view example_text()
{
    return example;
}

const Json& defaults()
{
    static const Json tree = load_yaml(example);
    return tree;
}

void check_keys(const Json& cfg)
{
    if (!cfg.is_object())
        throw ConfigError("config must be a mapping of sections");
    check_against(cfg, defaults(), "");
}

Json parse(std::string_view yaml_text)
{
    Json user = load_yaml(yaml_text);
    if (user.is_null())
        user = Json::object();
    check_keys(user);
    Json cfg = defaults();
    merge_into(cfg, user);
    return cfg;
}

void apply_override(Json& cfg, std::string_view assignment)
{
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    std::string_view path = assignment.substr(0, eq);
    Json value = load_yaml(assignment.substr(eq + 1));

    const Json* schema = &defaults();
    Json* node = &cfg;
    auto parts = split_path(path);
    for (std::size_t k = 0; k < parts.size(); ++k)
    {
        const auto& part = parts[k];
        if (!schema->is_object() || !schema->contains(part))
        {
            // Numeric parts index into lists below a known key.
            if (node->is_array())
            {
                std::size_t idx = 0;
                auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
                if (ec != std::errc{} || end != part.data() + part.size() || idx >= node->size())
                    throw ConfigError("bad list index '" + part + "' in override of '"
                                      + std::string(path) + "'");
                node = &(*node)[idx];
                continue;
            }
            throw ConfigError("unknown config key '" + std::string(path) + "'");
        }
        schema = &schema->at(part);
        node = &(*node)[part];
    }
    if (schema->is_object())
        throw ConfigError("override of '" + std::string(path) + "' must name a key, not a section");
    *node = std::move(value);
}

const Json& at(const Json& cfg, std::string_view path)
{
    const Json* node = &cfg;
    for (const auto& part : split_path(path))
    {
        if (!node->is_object() || !node->contains(part))
            throw ConfigError("missing config key '" + std::string(path) + "'");
        node = &node->at(part);
    }
    return *node;
}

double number(const Json& cfg, std::string_view path)
{
    return as_number(at(cfg, path), path);
}

std::size_t count(const Json& cfg, std::string_view path)
{
    return as_count(at(cfg, path), path);
}

std::string text(const Json& cfg, std::string_view path)
{
    const Json& v = at(cfg, path);
    if (!v.is_string())
        type_error(path, "a string");
    return v.get<std::string>();
}

bool flag(const Json& cfg, std::string_view path)
{
    const Json& v = at(cfg, path);
    if (!v.is_boolean())
        type_error(path, "true or false");
    return v.get<bool>();
}

std::vector<double> numbers(const Json& cfg, std::string_view path)
{
    std::vector<double> out;
    for (const auto& v : listify(at(cfg, path)))
        out.push_back(as_number(v, path));
    return out;
}

std::vector<std::size_t> counts(const Json& cfg, std::string_view path)
{
    std::vector<std::size_t> out;
    for (const auto& v : listify(at(cfg, path)))
        out.push_back(as_count(v, path));
    return out;
}

//---------------------------------------------------------------------------//
ChainDefinition chain_definition(const Json& cfg)
{
    ChainDefinition def;
    def.n = count(cfg, "chain.n");
    def.d = count(cfg, "chain.d");
    if (def.n == 0 || def.d == 0)
        throw ConfigError("chain.n and chain.d must be positive");
    const std::size_t nx = def.n * def.d;

    const Json& drifts = at(cfg, "chain.drifts");
    if (!drifts.is_array() || drifts.size() != def.n)
        throw ConfigError("chain.drifts needs one entry per subsystem (" + std::to_string(def.n)
                          + ")");
    for (const auto& row : drifts)
    {
        std::vector<std::string> comps;
        for (const auto& c : listify(row))
            comps.push_back(as_expression(c, "chain.drifts"));
        def.drifts.push_back(std::move(comps));
    }
    const Json& sigma = at(cfg, "chain.sigma");
    for (const auto& row : listify(sigma))
    {
        std::vector<std::string> cols;
        for (const auto& c : listify(row))
            cols.push_back(as_expression(c, "chain.sigma"));
        def.sigma.push_back(std::move(cols));
    }
    def.eps = numbers(cfg, "chain.eps");
    def.x0 = numbers(cfg, "chain.x0");
    def.horizon = number(cfg, "chain.horizon");

    auto lower = numbers(cfg, "domains.lower");
    auto upper = numbers(cfg, "domains.upper");
    auto broadcast = [&](std::vector<double>& v, const char* key) {
        if (v.size() == 1)
            v.assign(nx, v[0]);
        else if (v.size() != nx)
            throw ConfigError(std::string("config key '") + key + "' needs 1 or n*d = "
                              + std::to_string(nx) + " entries");
    };
    broadcast(lower, "domains.lower");
    broadcast(upper, "domains.upper");
    for (std::size_t i = 0; i < def.n; ++i)
    {
        auto first = lower.begin() + static_cast<std::ptrdiff_t>(i * def.d);
        auto ufirst = upper.begin() + static_cast<std::ptrdiff_t>(i * def.d);
        def.domains.push_back(Box{{first, first + static_cast<std::ptrdiff_t>(def.d)},
                                  {ufirst, ufirst + static_cast<std::ptrdiff_t>(def.d)}});
    }

    const Json& sets = at(cfg, "controls.values");
    if (!sets.is_array() || (sets.size() != 1 && sets.size() != def.n))
        throw ConfigError("controls.values needs one control set, or one per subsystem");
    for (std::size_t i = 0; i < def.n; ++i)
    {
        const Json& set = sets.size() == 1 ? sets[0] : sets[i];
        ControlSet cs;
        cs.dim = 0;
        for (const auto& entry : listify(set))
        {
            std::vector<double> u;
            for (const auto& c : listify(entry))
                u.push_back(as_number(c, "controls.values"));
            if (cs.dim == 0)
                cs.dim = u.size();
            else if (u.size() != cs.dim)
                throw ConfigError("control set " + std::to_string(i + 1)
                                  + " mixes vectors of different length");
            cs.values.push_back(std::move(u));
        }
        if (cs.values.empty())
            throw ConfigError("control set " + std::to_string(i + 1) + " is empty");
        def.controls.push_back(std::move(cs));
    }
    return def;
}

}  // namespace chainexit::config
