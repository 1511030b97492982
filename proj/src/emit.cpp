#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "esdlab/error.hpp"
#include "esdlab/harness.hpp"

namespace esdlab {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void close_checked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw std::runtime_error("error while writing " + path.string());
}

std::string short_number(double x) {
  x += 0.0;  // no "-0" in attributes
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double TrialRecord::get(const std::string& name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  throw std::out_of_range("no metric '" + name + "' in record");
}

void write_trials_csv(const std::vector<TrialRecord>& records, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "experiment,n,trial,seed,metric,value\n";
  for (const auto& r : records) {
    for (const auto& [name, value] : r.metrics) {
      out << r.experiment << ',' << r.n << ',' << r.trial << ',' << r.seed << ',' << name << ','
          << format_number(value) << '\n';
    }
  }
  close_checked(out, path);
}

void write_field_csv(const std::vector<FieldRow>& rows, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "re_z,im_z,f_n,f_reg,reference,gap\n";
  for (const auto& r : rows) {
    const double f = r.f_n.is_minus_infinity() ? -std::numeric_limits<double>::infinity() : r.f_n.value();
    const double gap = r.f_n.is_minus_infinity() ? std::numeric_limits<double>::infinity() : std::abs(f - r.reference);
    out << format_number(r.z.real()) << ',' << format_number(r.z.imag()) << ',' << format_number(f) << ','
        << format_number(r.f_reg) << ',' << format_number(r.reference) << ',' << format_number(gap) << '\n';
  }
  close_checked(out, path);
}

void write_ds_csv(const StieltjesSolution& solution, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "x,eta,re_m,im_m,density\n";
  for (const auto& level : solution.levels) {
    for (std::size_t i = 0; i < solution.x_grid.size(); ++i) {
      const cplx m = level.m_values[i];
      out << format_number(solution.x_grid[i]) << ',' << format_number(level.eta) << ',' << format_number(m.real())
          << ',' << format_number(m.imag()) << ',' << format_number(m.imag() / std::numbers::pi) << '\n';
    }
  }
  close_checked(out, path);
}

std::string scatter_svg(const EmpiricalMeasure2D& mu, cplx center) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"500\" viewBox=\"-2.5 -2.5 5 5\">\n";
  s << "<rect x=\"-2.5\" y=\"-2.5\" width=\"5\" height=\"5\" fill=\"white\"/>\n";
  s << "<g stroke=\"#999\" stroke-width=\"0.005\">\n";
  s << "<line x1=\"-2.5\" y1=\"0\" x2=\"2.5\" y2=\"0\"/>\n";
  s << "<line x1=\"0\" y1=\"-2.5\" x2=\"0\" y2=\"2.5\"/>\n";
  for (int k = -2; k <= 2; ++k) {
    if (k == 0) continue;
    s << "<line x1=\"" << k << "\" y1=\"-0.04\" x2=\"" << k << "\" y2=\"0.04\"/>\n";
    s << "<line x1=\"-0.04\" y1=\"" << k << "\" x2=\"0.04\" y2=\"" << k << "\"/>\n";
  }
  s << "</g>\n";
  s << "<circle cx=\"" << short_number(center.real()) << "\" cy=\"" << short_number(-center.imag())
    << "\" r=\"1\" fill=\"none\" stroke=\"#c00\" stroke-width=\"0.01\"/>\n";
  s << "<g fill=\"#124\">\n";
  for (const auto& z : mu.atoms) {
    s << "<circle cx=\"" << short_number(z.real()) << "\" cy=\"" << short_number(-z.imag()) << "\" r=\"0.01\"/>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

void write_scatter_svg(const EmpiricalMeasure2D& mu, cplx center, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << scatter_svg(mu, center);
  close_checked(out, path);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 init failed");
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

void write_manifest(const ExperimentConfig& config, const ExperimentResult& result, const std::filesystem::path& dir) {
  using json = nlohmann::ordered_json;
  json artifacts = json::array();
  json unhashed = json::array();
  for (const auto& p : result.artifacts) {
    const auto name = p.filename().string();
    // Wall-clock timings differ between runs by nature.
    if (name == "timings.csv") {
      unhashed.push_back(name);
      continue;
    }
    artifacts.push_back(json{{"path", name}, {"bytes", std::filesystem::file_size(p)}, {"sha256", sha256_file(p)}});
  }
  json assertions = json::array();
  for (const auto& a : result.assertions) {
    assertions.push_back(json{{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  }
  const json manifest{{"experiment", to_string(config.experiment)},
                      {"config", json::parse(serialize_config(config))},
                      {"assertions", assertions},
                      {"numerical_failures", result.numerical_failures},
                      {"artifacts", artifacts},
                      {"unhashed", unhashed}};
  const auto path = dir / "manifest.json";
  auto out = open_for_write(path);
  out << manifest.dump(2) << '\n';
  close_checked(out, path);
}

}  // namespace esdlab
