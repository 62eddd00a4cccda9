#include "symco/config.hh"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "symco/errors.hh"

namespace symco {

namespace {

using nlohmann::json;

Vec parse_vec(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + ": expected numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

/* row-major flat array */
Mat parse_mat(const json& j, int rows, int cols, const std::string& what) {
  Vec flat = parse_vec(j, what);
  if (flat.size() != static_cast<int>(rows) * cols)
    throw ConfigError(what + ": expected " + std::to_string(rows * cols) +
                      " entries (row-major), got " + std::to_string(flat.size()));
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = flat[r * cols + c];
  }
  return m;
}

Box parse_box(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("lower") || !j.contains("upper"))
    throw ConfigError(what + ": expected {lower, upper}");
  return Box(parse_vec(j["lower"], what + ".lower"), parse_vec(j["upper"], what + ".upper"));
}

BoxList parse_box_list(const json& j, const std::string& what) {
  BoxList out;
  if (j.is_object()) {
    out.push_back(parse_box(j, what));
    return out;
  }
  if (!j.is_array()) throw ConfigError(what + ": expected a box or list of boxes");
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_box(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

KinfFn parse_kinf(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError(what + ": expected a comparison-function object with kind");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "linear") return KinfFn::linear(j.at("slope").get<double>());
  if (kind == "power")
    return KinfFn::power(j.at("coeff").get<double>(), j.at("exponent").get<double>());
  if (kind == "compose")
    return KinfFn::compose(parse_kinf(j.at("outer"), what + ".outer"),
                           parse_kinf(j.at("inner"), what + ".inner"));
  if (kind == "max") {
    std::vector<KinfFn> parts;
    for (const auto& p : j.at("parts")) parts.push_back(parse_kinf(p, what + ".part"));
    return KinfFn::max_of(std::move(parts));
  }
  throw ConfigError(what + ": unknown kind '" + kind + "'");
}

}  // namespace

NetworkDocument parse_network_document(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("subsystems"))
    throw ConfigError("network document: missing subsystems");

  NetworkDocument out;
  try {
    for (const auto& js : doc["subsystems"]) {
      const int id = js.at("id").get<int>();
      const std::string tag = "subsystem " + std::to_string(id);
      const BoxList state_domain = parse_box_list(js.at("state_domain"), tag + ".state_domain");
      const int n = dim(state_domain);

      BoxList internal_domain;
      std::vector<InternalBlock> internal_blocks;
      int q = 0;
      if (js.contains("internal_domain")) {
        internal_domain = parse_box_list(js["internal_domain"], tag + ".internal_domain");
        q = dim(internal_domain);
      }
      if (js.contains("internal_blocks")) {
        for (const auto& jb : js["internal_blocks"]) {
          internal_blocks.push_back(
              {jb.at("source").get<int>(), jb.at("dim").get<int>()});
        }
      } else if (q > 0) {
        throw ConfigError(tag + ": internal_domain given without internal_blocks");
      }

      std::vector<ModeDynamics> modes;
      for (const auto& jm : js.at("modes")) {
        ModeDynamics dyn;
        dyn.A = parse_mat(jm.at("A"), n, n, tag + ".A");
        dyn.b = jm.contains("b") ? parse_vec(jm["b"], tag + ".b") : Vec::Zero(n);
        dyn.D = jm.contains("D") ? parse_mat(jm["D"], n, q, tag + ".D") : Mat::Zero(n, q);
        modes.push_back(std::move(dyn));
      }

      std::vector<OutputBlock> outputs;
      if (js.contains("outputs")) {
        for (const auto& jo : js["outputs"]) {
          const json& jc = jo.at("C");
          const int rows = static_cast<int>(jc.size()) / n;
          outputs.push_back({jo.at("target").get<int>(),
                             parse_mat(jc, rows, n, tag + ".C")});
        }
      } else {
        outputs.push_back({id, Mat::Identity(n, n)});
      }

      const int dwell = js.contains("dwell_time") ? js["dwell_time"].get<int>() : 1;
      KinfFn ell = js.contains("output_lipschitz")
                       ? parse_kinf(js["output_lipschitz"], tag + ".output_lipschitz")
                       : KinfFn::identity();

      out.network.subsystems.emplace_back(id, std::move(modes), state_domain,
                                          internal_domain, std::move(internal_blocks),
                                          std::move(outputs), dwell, std::move(ell));

      SubsystemExtras extras;
      if (js.contains("safe")) extras.safe_output = parse_box(js["safe"], tag + ".safe");
      if (js.contains("assumption"))
        extras.assumption = parse_box(js["assumption"], tag + ".assumption");
      if (js.contains("weights")) {
        std::vector<Vec> ws;
        for (const auto& jw : js["weights"]) ws.push_back(parse_vec(jw, tag + ".weights"));
        extras.weights = std::move(ws);
      }
      out.extras.push_back(std::move(extras));
    }

    if (doc.contains("edges")) {
      for (const auto& je : doc["edges"]) {
        if (!je.is_array() || je.size() != 2)
          throw ConfigError("network document: edges must be [from, to] pairs");
        out.network.edges.push_back({je[0].get<int>(), je[1].get<int>()});
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network document: ") + e.what());
  } catch (const Error&) {
    throw;
  }
  return out;
}

NetworkDocument load_network_document(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("network document: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_network_document(buf.str());
}

}  // namespace symco
