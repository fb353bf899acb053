#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gazediff/corpus.hpp"
#include "gazediff/eval.hpp"
#include "gazediff/signal.hpp"

using namespace gazediff;

TEST_CASE("user signatures: deterministic, distinct, in range") {
  const auto a = corpus::generate_user(7, 3);
  const auto b = corpus::generate_user(7, 3);
  CHECK(a.tremor_amplitude == b.tremor_amplitude);
  CHECK(a.saccade_vmax == b.saccade_vmax);

  // collision check across 64 users
  for (int u = 1; u < 64; ++u) {
    const auto other = corpus::generate_user(7, u);
    const bool differs = other.tremor_amplitude != a.tremor_amplitude ||
                         other.microsaccade_rate != a.microsaccade_rate ||
                         other.saccade_vmax != a.saccade_vmax ||
                         other.fixation_mu != a.fixation_mu;
    if (u != 3) CHECK(differs);
  }

  for (int draw = 0; draw < 1000; ++draw) {
    const auto sig = corpus::generate_user(1234, draw);
    CHECK(sig.tremor_amplitude > 0.0);
    CHECK(sig.tremor_amplitude < 0.5);
    CHECK(sig.tremor_color >= 0.5);
    CHECK(sig.tremor_color <= 2.0);
    CHECK(sig.microsaccade_rate > 0.0);
    CHECK(sig.microsaccade_rate <= 3.0);
    CHECK(sig.saccade_vmax >= 300.0);
    CHECK(sig.saccade_vmax <= 700.0);
    CHECK(sig.fixation_sigma > 0.0);
  }
}

TEST_CASE("generated sequences look like gaze") {
  const auto sig = corpus::generate_user(7, 0);
  const auto g = corpus::generate_sequence(sig, 5000, 1000.0, 99);
  REQUIRE(g.length() == 5000);
  for (std::size_t i = 0; i < g.length(); ++i) {
    CHECK(std::abs(g.x[i]) <= 15.0 + 1e-9);
    CHECK(std::abs(g.y[i]) <= 15.0 + 1e-9);
  }
  // I-VT finds both event classes
  const auto v = signal::savgol_derivative(g);
  int fixations = 0, saccades = 0;
  for (std::size_t i = 0; i < v.length(); ++i) {
    const auto cls = eval::ivt_classify(std::hypot(v.vx[i], v.vy[i]));
    fixations += cls == eval::EventClass::fixation;
    saccades += cls == eval::EventClass::saccade;
  }
  CHECK(fixations > 0);
  CHECK(saccades > 0);

  // determinism
  const auto h = corpus::generate_sequence(sig, 5000, 1000.0, 99);
  CHECK(g.x == h.x);
  CHECK(g.y == h.y);
}

TEST_CASE("csv round trip, invalid samples and parse errors") {
  const auto dir = std::filesystem::temp_directory_path() / "gazediff_csv";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "seq.csv").string();

  const auto sig = corpus::generate_user(3, 1);
  auto g = corpus::generate_sequence(sig, 200, 1000.0, 5);
  g.valid[17] = false;
  corpus::save_csv(g, path);
  const auto back = corpus::load_csv(path);
  REQUIRE(back.length() == 200);
  CHECK(back.sample_rate == doctest::Approx(1000.0));
  CHECK_FALSE(back.valid[17]);
  for (std::size_t i = 0; i < 200; ++i) {
    if (!g.valid[i]) continue;
    CHECK(back.x[i] == doctest::Approx(g.x[i]).epsilon(1e-5));
    CHECK(back.y[i] == doctest::Approx(g.y[i]).epsilon(1e-5));
  }

  {
    std::ofstream bad(path);
    bad << "n,x,y\n0,1.0,2.0\nnope,3.0,4.0\n";
  }
  try {
    corpus::load_csv(path);
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);  // line number
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("corpus save/load and split") {
  corpus::CorpusConfig cfg;
  cfg.n_users = 3;
  cfg.sequences_per_user = 4;
  cfg.sequence_length = 100;
  cfg.seed = 31;
  const auto c = corpus::generate(cfg);
  REQUIRE(c.sequences.size() == 3);
  REQUIRE(c.sequences[0].size() == 4);

  const auto dir = std::filesystem::temp_directory_path() / "gazediff_corpus";
  std::filesystem::remove_all(dir);
  corpus::save(c, dir.string());
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "1" / "2.csv"));
  const auto back = corpus::load(dir.string());
  CHECK(back.config.n_users == 3);
  CHECK(back.sequences[2][3].length() == 100);
  std::filesystem::remove_all(dir);

  const auto split = corpus::split(c, 0.5, 11);
  CHECK(split.train.size() == 6);
  CHECK(split.test.size() == 6);
  for (const auto& [user, k] : split.train)
    for (const auto& [tu, tk] : split.test)
      CHECK_FALSE((user == tu && k == tk));
  // per-user stratification: 2/2
  for (int u = 0; u < 3; ++u) {
    int n = 0;
    for (const auto& [user, k] : split.train) n += user == u;
    CHECK(n == 2);
  }
  const auto again = corpus::split(c, 0.5, 11);
  CHECK(again.train == split.train);
  CHECK(again.test == split.test);
  CHECK_THROWS_AS(corpus::split(c, 1.2, 1), std::invalid_argument);
}

TEST_CASE("generation is deterministic end to end") {
  corpus::CorpusConfig cfg;
  cfg.n_users = 2;
  cfg.sequences_per_user = 2;
  cfg.sequence_length = 300;
  cfg.seed = 77;
  const auto a = corpus::generate(cfg);
  const auto b = corpus::generate(cfg);
  for (int u = 0; u < 2; ++u)
    for (int k = 0; k < 2; ++k) {
      CHECK(a.sequences[u][k].x == b.sequences[u][k].x);
      CHECK(a.sequences[u][k].y == b.sequences[u][k].y);
    }
}
