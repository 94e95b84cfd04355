#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace fixtures {

double gaussian(plr::Rng& rng) {
  double s = 0.0;
  for (int i = 0; i < 12; ++i) s += rng.uniform();
  return s - 6.0;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string abalone_like_csv(std::size_t n, std::uint64_t seed) {
  plr::Rng rng(seed);
  std::ostringstream out;
  out << "sex,length,diameter,height,whole_weight,shucked_weight,viscera_weight,"
         "shell_weight,rings\n";
  for (std::size_t i = 0; i < n; ++i) {
    plr::Rng r = rng.derive(i);
    const double sex_draw = r.uniform();
    const char* sex = sex_draw < 0.37 ? "M" : (sex_draw < 0.68 ? "F" : "I");
    const bool infant = sex[0] == 'I';

    // Ring counts are roughly log-normal; infants skew younger. The
    // measurements reveal age only through a perturbed growth curve, so a
    // perfect model still carries a noise floor of a few rings squared.
    const double log_mu = infant ? 2.02 : 2.36;
    const double t_star = std::exp(log_mu + 0.30 * gaussian(r));
    const double rings = std::clamp(std::round(t_star), 1.0, 29.0);
    const double growth_age = t_star * (1.0 + 0.16 * gaussian(r));

    const double curve = 1.0 - std::exp(-std::max(growth_age, 0.3) / 8.0);
    const double length = std::max(0.05, 0.82 * curve * (1.0 + 0.03 * gaussian(r)));
    const double diameter = length * (0.78 + 0.02 * gaussian(r));
    const double height = length * (0.35 + 0.03 * gaussian(r));
    const double whole = std::max(0.002, 1.8 * std::pow(length, 2.9) * (1.0 + 0.06 * gaussian(r)));
    const double shucked = whole * std::max(0.05, 0.44 + 0.04 * gaussian(r));
    const double viscera = whole * std::max(0.03, 0.22 + 0.02 * gaussian(r));
    const double shell = whole * std::max(0.03, 0.27 + 0.02 * gaussian(r));

    out << sex << ',' << num(length) << ',' << num(diameter) << ',' << num(height) << ','
        << num(whole) << ',' << num(shucked) << ',' << num(viscera) << ',' << num(shell)
        << ',' << num(rings) << '\n';
  }
  return out.str();
}

std::string concrete_like_csv(std::size_t n, std::uint64_t seed) {
  plr::Rng rng(seed);
  const double ages[] = {3, 7, 14, 28, 28, 28, 56, 90, 180, 365};
  std::ostringstream out;
  out << "cement,slag,ash,water,superplasticizer,coarse_aggregate,fine_aggregate,age,"
         "strength\n";
  for (std::size_t i = 0; i < n; ++i) {
    plr::Rng r = rng.derive(i);
    const double cement = r.uniform(102.0, 540.0);
    const double slag = r.uniform() < 0.55 ? r.uniform(20.0, 360.0) : 0.0;
    const double ash = r.uniform() < 0.45 ? r.uniform(20.0, 200.0) : 0.0;
    const double water = r.uniform(122.0, 247.0);
    const double sp = r.uniform() < 0.6 ? r.uniform(2.0, 32.0) : 0.0;
    const double coarse = r.uniform(801.0, 1145.0);
    const double fine = r.uniform(594.0, 993.0);
    const double age = ages[r.below(10)];

    const double binder = cement + 0.9 * slag + 0.55 * ash;
    const double wb = water / binder;
    const double age_factor = std::min(0.25 + 0.75 * std::log(1.0 + age) / std::log(29.0), 1.2);
    double strength = 105.0 * std::exp(-2.4 * wb) * age_factor * (1.0 + 0.004 * sp);
    strength *= 1.0 + 0.09 * gaussian(r);
    strength += 1.5 * gaussian(r);
    strength = std::clamp(strength, 2.0, 83.0);

    out << num(cement) << ',' << num(slag) << ',' << num(ash) << ',' << num(water) << ','
        << num(sp) << ',' << num(coarse) << ',' << num(fine) << ',' << num(age) << ','
        << num(strength) << '\n';
  }
  return out.str();
}

std::string linear_csv(std::size_t n, std::uint64_t seed, double noise) {
  plr::Rng rng(seed);
  std::ostringstream out;
  out << "a,b,y\n";
  for (std::size_t i = 0; i < n; ++i) {
    plr::Rng r = rng.derive(i);
    const double a = r.uniform(-1.0, 1.0);
    const double b = r.uniform(-1.0, 1.0);
    const double y = 3.0 * a - 2.0 * b + 1.0 + noise * gaussian(r);
    out << num(a) << ',' << num(b) << ',' << num(y) << '\n';
  }
  return out.str();
}

std::string linear_schema_json() {
  return R"({
  "columns": [
    {"name": "a", "kind": "continuous"},
    {"name": "b", "kind": "continuous"}
  ],
  "target": "y"
})";
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  path_ = base / ("plr_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("fixtures: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("fixtures: cannot write " + path.string());
  out << text;
}

std::filesystem::path schema_path(const std::string& name) {
#ifdef PLR_SOURCE_DIR
  return std::filesystem::path(PLR_SOURCE_DIR) / "data" / "schemas" / (name + ".json");
#else
  return std::filesystem::path("data") / "schemas" / (name + ".json");
#endif
}

}  // namespace fixtures
