#include "excite/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "excite/csv.hpp"
#include "excite/error.hpp"

namespace excite {
namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

nlohmann::ordered_json matrix_json(const Matrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (double v : m.row(r)) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_theta_csv(std::ostream& out, std::span<const DocTopicMix> mixes, std::size_t topics) {
  out << "doc_id,timestamp,source";
  for (std::size_t k = 0; k < topics; ++k) out << ",theta_" << k;
  out << '\n';
  for (const auto& m : mixes) {
    if (m.theta.size() != topics) throw input_error("theta of document " + m.doc_id + " has the wrong length");
    out << csv::quote(m.doc_id) << ',' << m.timestamp << ',' << csv::quote(m.source);
    for (double v : m.theta) out << ',' << csv::format_exact(v);
    out << '\n';
  }
}

void write_theta_csv(const std::filesystem::path& path, std::span<const DocTopicMix> mixes, std::size_t topics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path.string());
  write_theta_csv(out, mixes, topics);
  if (!out) throw input_error("failed writing " + path.string());
}

std::vector<DocTopicMix> read_theta_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw input_error(path.string() + ": empty theta file");
  const auto header = csv::split(line);
  if (header.size() < 4 || header[0] != "doc_id" || header[1] != "timestamp" || header[2] != "source")
    throw input_error(path.string() + ":1: expected header doc_id,timestamp,source,theta_0,...");
  const std::size_t topics = header.size() - 3;
  for (std::size_t k = 0; k < topics; ++k)
    if (header[3 + k] != "theta_" + std::to_string(k))
      throw input_error(path.string() + ":1: unexpected column " + header[3 + k]);

  std::vector<DocTopicMix> mixes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    const auto fields = csv::split(line);
    if (fields.size() != header.size()) throw input_error(where + "expected " + std::to_string(header.size()) + " fields");
    DocTopicMix m;
    m.doc_id = fields[0];
    m.source = fields[2];
    try {
      m.timestamp = csv::parse_int(fields[1]);
      for (std::size_t k = 0; k < topics; ++k) m.theta.push_back(csv::parse_double(fields[3 + k]));
    } catch (const Error& e) {
      throw input_error(where + e.what());
    }
    mixes.push_back(std::move(m));
  }
  return mixes;
}

void write_weight_csv(std::ostream& out, const PosteriorSummary& summary) {
  const auto& labels = summary.labels;
  out << "from/to";
  for (const auto& l : labels) out << ',' << csv::quote(l);
  out << '\n';
  for (std::size_t a = 0; a < labels.size(); ++a) {
    out << csv::quote(labels[a]);
    for (std::size_t b = 0; b < labels.size(); ++b) out << ',' << fixed6(summary.mean_weights(a, b));
    out << '\n';
  }
}

nlohmann::ordered_json posterior_json(const PosteriorSummary& s) {
  nlohmann::ordered_json j;
  j["labels"] = s.labels;
  j["mean_lambda0"] = s.mean_lambda0;
  j["mean_W"] = matrix_json(s.mean_weights);
  j["ci90_W"] = {{"lower", matrix_json(s.ci90_lower)}, {"upper", matrix_json(s.ci90_upper)}};
  auto impulse = nlohmann::ordered_json::array();
  const std::size_t k = s.labels.size();
  for (std::size_t a = 0; a < k; ++a) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t b = 0; b < k; ++b) row.push_back(s.mean_impulse[a * k + b]);
    impulse.push_back(std::move(row));
  }
  j["mean_impulse"] = std::move(impulse);
  j["n_samples"] = s.n_samples;
  j["config"] = {
      {"iterations", s.config.iterations},
      {"burn_in", s.config.burn_in},
      {"thinning", s.config.thinning},
      {"seed", s.config.seed},
      {"lambda0_prior", {{"shape", s.config.lambda0.shape}, {"rate", s.config.lambda0.rate}}},
      {"weight_prior", {{"shape", s.config.weight.shape}, {"rate", s.config.weight.rate}}},
      {"impulse_concentration", s.config.impulse_concentration},
      {"dt_max", s.basis.dt_max},
      {"basis_edges", s.basis.edges},
  };
  return j;
}

void write_heatmap_svg(std::ostream& out, const PosteriorSummary& summary, const std::string& title) {
  const auto& labels = summary.labels;
  const std::size_t k = labels.size();
  const int cell = 56;
  std::size_t longest = 1;
  for (const auto& l : labels) longest = std::max(longest, l.size());
  const int left = 16 + static_cast<int>(longest) * 8;
  const int top = 40 + static_cast<int>(longest) * 8;
  const int width = left + static_cast<int>(k) * cell + 16;
  const int height = top + static_cast<int>(k) * cell + 40;

  double max_w = 0.0;
  for (double v : summary.mean_weights.values()) max_w = std::max(max_w, v);
  const double scale = max_w > 0.0 ? max_w : 1.0;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "  <title>" << xml_escape(title) << "</title>\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out << "  <text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";

  for (std::size_t b = 0; b < k; ++b) {
    const int x = left + static_cast<int>(b) * cell + cell / 2;
    out << "  <text class=\"col-label\" x=\"" << x << "\" y=\"" << top - 6 << "\" transform=\"rotate(-60 " << x << ' '
        << top - 6 << ")\">" << xml_escape(labels[b]) << "</text>\n";
  }
  for (std::size_t a = 0; a < k; ++a) {
    const int y = top + static_cast<int>(a) * cell + cell / 2 + 4;
    out << "  <text class=\"row-label\" x=\"" << left - 6 << "\" y=\"" << y << "\" text-anchor=\"end\">"
        << xml_escape(labels[a]) << "</text>\n";
  }

  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      const double w = summary.mean_weights(a, b);
      const double level = std::clamp(w / scale, 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - level)));
      char fill[8];
      std::snprintf(fill, sizeof fill, "#%02x%02x%02x", shade, shade, shade);
      const int x = left + static_cast<int>(b) * cell;
      const int y = top + static_cast<int>(a) * cell;
      out << "  <rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << fill << "\" stroke=\"#999999\" data-from=\"" << xml_escape(labels[a]) << "\" data-to=\""
          << xml_escape(labels[b]) << "\" data-weight=\"" << fixed6(w) << "\" data-shade=\"" << shade << "\"/>\n";
      out << "  <text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
          << (shade < 128 ? "#ffffff" : "#000000") << "\">" << fixed6(w).substr(0, 4) << "</text>\n";
    }
  }
  out << "  <text x=\"" << left << "\" y=\"" << height - 14
      << "\">rows: source process, columns: target process</text>\n";
  out << "</svg>\n";
}

HawkesNetwork network_from_json(const nlohmann::json& desc) {
  try {
    const auto labels = desc.at("labels").get<std::vector<std::string>>();
    const auto lambda0 = desc.at("lambda0").get<std::vector<double>>();
    const auto rows = desc.at("weights").get<std::vector<std::vector<double>>>();
    const std::size_t k = labels.size();
    if (k == 0) throw config_error("network has no processes");
    if (lambda0.size() != k || rows.size() != k) throw config_error("network lambda0/weights size differs from labels");
    Matrix w(k, k);
    for (std::size_t a = 0; a < k; ++a) {
      if (rows[a].size() != k) throw config_error("network weights must be square");
      for (std::size_t b = 0; b < k; ++b) w(a, b) = rows[a][b];
    }
    const auto edges = desc.contains("basis_edges") ? desc.at("basis_edges").get<std::vector<std::size_t>>()
                                                    : std::vector<std::size_t>{8, 32, 96};
    const auto basis = ImpulseBasis::boxcars(edges);
    if (!desc.contains("impulse")) return HawkesNetwork::with_uniform_impulse(labels, lambda0, w, basis);

    EdgeCoefficients coeffs;
    const auto& imp = desc.at("impulse");
    if (!imp.empty() && imp.front().is_number()) {
      const auto shared = imp.get<std::vector<double>>();
      coeffs.assign(k * k, shared);
    } else {
      const auto per = imp.get<std::vector<std::vector<std::vector<double>>>>();
      if (per.size() != k) throw config_error("network impulse must have one row per process");
      for (const auto& row : per) {
        if (row.size() != k) throw config_error("network impulse must be K x K");
        for (const auto& c : row) coeffs.push_back(c);
      }
    }
    for (const auto& c : coeffs)
      if (c.size() != basis.size()) throw config_error("network impulse coefficients must match the basis size");
    auto net = HawkesNetwork::from_basis(labels, lambda0, w, basis, coeffs);
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("malformed network description: ") + e.what());
  }
}

HawkesNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open network description " + path.string());
  nlohmann::json description;
  try {
    description = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(path.string() + ": " + e.what());
  }
  try {
    return network_from_json(description);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace excite
