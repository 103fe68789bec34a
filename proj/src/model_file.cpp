#include "tvol/model_file.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <optional>
#include <span>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tvol {
namespace {

namespace pt = boost::property_tree;

double parse_number(const std::string& raw, const std::string& where) {
  std::string s = raw;
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument(where + ": not a number: '" + raw + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& raw, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, where));
  return out;
}

void reject_unknown(const pt::ptree& section, const std::string& name,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, child] : section) {
    if (!allowed.contains(key)) throw std::invalid_argument("[" + name + "]: unknown key '" + key + "'");
  }
}

CoefficientFunction read_coefficient(const pt::ptree& root, const std::string& name,
                                     std::optional<double> fallback) {
  auto section = root.get_child_optional(name);
  if (!section) {
    if (fallback) return CoefficientFunction::constant(*fallback);
    throw std::invalid_argument("missing required section [" + name + "]");
  }
  reject_unknown(*section, name, {"value", "breakpoints", "values"});
  auto value = section->get_optional<std::string>("value");
  auto bps = section->get_optional<std::string>("breakpoints");
  auto vals = section->get_optional<std::string>("values");
  if (value && !bps && !vals) {
    return CoefficientFunction::constant(parse_number(*value, "[" + name + "] value"));
  }
  if (!value && bps && vals) {
    try {
      return CoefficientFunction(parse_list(*bps, "[" + name + "] breakpoints"),
                                 parse_list(*vals, "[" + name + "] values"));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("[" + name + "]: " + e.what());
    }
  }
  throw std::invalid_argument("[" + name + "]: give either 'value' or both 'breakpoints' and 'values'");
}

JumpSpec read_jumps(const pt::ptree& root, const std::string& name) {
  auto section = root.get_child_optional(name);
  if (!section) return JumpSpec::none();
  const std::string where = "[" + name + "]";
  auto num = [&](const char* key, double dflt) {
    auto v = section->get_optional<std::string>(key);
    return v ? parse_number(*v, where + " " + key) : dflt;
  };
  JumpSpec spec;
  spec.intensity = num("intensity", 0.0);
  const std::string law = section->get<std::string>("law", "gaussian");
  if (law == "gaussian") {
    reject_unknown(*section, name, {"intensity", "law", "mean", "stddev"});
    spec.size_law = GaussianJumps{num("mean", 0.0), num("stddev", 1.0)};
  } else if (law == "fixed_signed") {
    reject_unknown(*section, name, {"intensity", "law", "magnitude", "up_probability"});
    spec.size_law = FixedSignedJumps{num("magnitude", 1.0), num("up_probability", 0.5)};
  } else if (law == "laplace") {
    reject_unknown(*section, name, {"intensity", "law", "scale"});
    spec.size_law = LaplaceJumps{num("scale", 1.0)};
  } else {
    throw std::invalid_argument(where + ": unknown jump law '" + law + "'");
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }
  return spec;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string format_list(std::span<const double> xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_double(xs[i]);
  }
  return out;
}

void write_coefficient(std::ostream& os, const std::string& name, const CoefficientFunction& f) {
  os << "\n[" << name << "]\n";
  if (f.pieces() == 1) {
    os << "value = " << format_double(f.values()[0]) << "\n";
  } else {
    os << "breakpoints = " << format_list(f.breakpoints()) << "\n";
    os << "values = " << format_list(f.values()) << "\n";
  }
}

void write_jumps(std::ostream& os, const std::string& name, const JumpSpec& j) {
  os << "\n[" << name << "]\n";
  os << "intensity = " << format_double(j.intensity) << "\n";
  std::visit(
      [&](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, GaussianJumps>) {
          os << "law = gaussian\nmean = " << format_double(law.mean)
             << "\nstddev = " << format_double(law.stddev) << "\n";
        } else if constexpr (std::is_same_v<T, FixedSignedJumps>) {
          os << "law = fixed_signed\nmagnitude = " << format_double(law.magnitude)
             << "\nup_probability = " << format_double(law.up_probability) << "\n";
        } else {
          os << "law = laplace\nscale = " << format_double(law.scale) << "\n";
        }
      },
      j.size_law);
}

}  // namespace

ModelSpec parse_model_text(const std::string& text) {
  pt::ptree root;
  std::istringstream in(text);
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("malformed model file: ") + e.what());
  }
  static const std::set<std::string> known = {"jump_coupling", "sigma1", "sigma2", "rho", "drift1",
                                              "drift2",        "jumps1", "jumps2"};
  for (const auto& [key, child] : root) {
    if (!known.contains(key)) throw std::invalid_argument("unknown model section or key '" + key + "'");
  }
  JumpCoupling coupling = JumpCoupling::Independent;
  const std::string c = root.get<std::string>("jump_coupling", "independent");
  if (c == "common_clock") {
    coupling = JumpCoupling::CommonClock;
  } else if (c != "independent") {
    throw std::invalid_argument("jump_coupling must be 'independent' or 'common_clock', got '" + c + "'");
  }
  return ModelSpec(read_coefficient(root, "sigma1", std::nullopt),
                   read_coefficient(root, "sigma2", std::nullopt), read_coefficient(root, "rho", 0.0),
                   read_coefficient(root, "drift1", 0.0), read_coefficient(root, "drift2", 0.0),
                   read_jumps(root, "jumps1"), read_jumps(root, "jumps2"), coupling);
}

ModelSpec load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open model file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_model_text(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("model file '" + path.string() + "': " + e.what());
  }
}

std::string model_to_text(const ModelSpec& model) {
  std::ostringstream os;
  os << "jump_coupling = "
     << (model.coupling() == JumpCoupling::CommonClock ? "common_clock" : "independent") << "\n";
  write_coefficient(os, "sigma1", model.sigma1());
  write_coefficient(os, "sigma2", model.sigma2());
  write_coefficient(os, "rho", model.rho());
  write_coefficient(os, "drift1", model.drift1());
  write_coefficient(os, "drift2", model.drift2());
  write_jumps(os, "jumps1", model.jumps1());
  write_jumps(os, "jumps2", model.jumps2());
  return os.str();
}

}  // namespace tvol
