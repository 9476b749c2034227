#include <doctest.h>

#include <sstream>
#include <stdexcept>

#include "moso/dataset.hpp"
#include "moso/errors.hpp"
#include "moso/model.hpp"
#include "moso/trainer.hpp"

using namespace moso;

TEST_SUITE("data") {

TEST_CASE("blobs cardinality and labels follow the arguments") {
  const Dataset ds = generate_blobs(2, 1, 2, 0.1, 7);
  CHECK(ds.size() == 2);
  CHECK(ds.dim == 2);
  CHECK(ds.num_classes == 2);
  CHECK(ds.samples[0].label == 0);
  CHECK(ds.samples[1].label == 1);
  ds.validate();
}

TEST_CASE("blobs are a pure function of their arguments") {
  const Dataset a = generate_blobs(3, 10, 5, 0.5, 1);
  const Dataset b = generate_blobs(3, 10, 5, 0.5, 1);
  CHECK(serialize_dataset(a) == serialize_dataset(b));
}

TEST_CASE("blobs reject invalid sizes") {
  CHECK_THROWS_AS(generate_blobs(1, 10, 2, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_blobs(2, 0, 2, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_blobs(2, 10, 0, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_blobs(2, 10, 2, 0.0, 0), std::invalid_argument);
}

TEST_CASE("a logistic model separates the default blobs") {
  const Dataset ds = generate_blobs(2, 100, 2, 0.3, 42);
  const SplitResult parts = split(ds, 0.8, 9);

  ModelSpec spec;
  spec.dim = 2;
  spec.num_classes = 2;
  spec.init_seed = 1;
  TrainConfig cfg;
  cfg.schedule = Schedule::constant(0.5);
  const FitResult result = fit(parts.train, spec, cfg, CaptureRule::none());

  int hits = 0;
  for (const Sample& s : parts.test.samples) {
    hits += predict(result.final_params, s.features) == s.label ? 1 : 0;
  }
  const double acc = static_cast<double>(hits) / parts.test.size();
  CHECK(acc > 0.9);
}

TEST_CASE("zero noise rate is the identity") {
  const Dataset ds = generate_blobs(3, 5, 2, 0.4, 3);
  const Dataset out = inject_label_noise(ds, NoiseConfig{0.0, 99});
  CHECK(out == ds);
  for (const Sample& s : out.samples) {
    CHECK_FALSE(s.noisy);
  }
}

TEST_CASE("noise redraw count follows round-half-even of rate*N") {
  const Dataset ds = generate_blobs(2, 5, 2, 0.4, 3);  // N = 10
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset out = inject_label_noise(ds, NoiseConfig{0.2, seed});
    int flips = 0;
    for (int i = 0; i < ds.size(); ++i) {
      const bool changed = out.samples[static_cast<std::size_t>(i)].label !=
                           ds.samples[static_cast<std::size_t>(i)].label;
      CHECK(out.samples[static_cast<std::size_t>(i)].noisy == changed);
      // Features ride along bit-exactly.
      CHECK(out.samples[static_cast<std::size_t>(i)].features ==
            ds.samples[static_cast<std::size_t>(i)].features);
      flips += changed ? 1 : 0;
    }
    CHECK(flips <= 2);  // exactly 2 redraws, each may hit the old label
  }
}

TEST_CASE("effective flip fraction matches the uniform-redraw expectation") {
  // K=10: redrawing 20% uniformly flips about 0.2 * 9/10 = 0.18 of labels.
  const Dataset ds = generate_blobs(10, 100, 2, 0.4, 17);
  const Dataset out = inject_label_noise(ds, NoiseConfig{0.2, 5});
  int noisy = 0;
  for (const Sample& s : out.samples) {
    noisy += s.noisy ? 1 : 0;
  }
  const double fraction = static_cast<double>(noisy) / out.size();
  CHECK(fraction > 0.15);
  CHECK(fraction < 0.21);
}

TEST_CASE("noise injection leaves the input dataset untouched") {
  const Dataset ds = generate_blobs(4, 10, 3, 0.4, 21);
  const Dataset copy = ds;
  (void)inject_label_noise(ds, NoiseConfig{0.5, 1});
  CHECK(ds == copy);
}

TEST_CASE("noise injection is a pure function of dataset and config") {
  const Dataset ds = generate_blobs(4, 10, 3, 0.4, 21);
  const Dataset a = inject_label_noise(ds, NoiseConfig{0.5, 1});
  const Dataset b = inject_label_noise(ds, NoiseConfig{0.5, 1});
  CHECK(serialize_dataset(a) == serialize_dataset(b));
  CHECK(serialize_dataset(a) !=
        serialize_dataset(inject_label_noise(ds, NoiseConfig{0.5, 2})));
}

TEST_CASE("split sizes follow the rounding contract") {
  const Dataset ds = generate_blobs(2, 5, 2, 0.4, 1);  // N = 10
  const SplitResult a = split(ds, 0.8, 0);
  CHECK(a.train.size() == 8);
  CHECK(a.test.size() == 2);

  // Test side rounds half down but keeps at least one sample.
  const SplitResult b = split(ds, 0.999, 0);
  CHECK(b.train.size() == 9);
  CHECK(b.test.size() == 1);

  CHECK_THROWS_AS(split(ds, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(split(ds, 1.0, 0), std::invalid_argument);
}

TEST_CASE("split is deterministic and covers all ids exactly once") {
  const Dataset ds = generate_blobs(3, 7, 2, 0.4, 2);
  const SplitResult a = split(ds, 0.75, 5);
  const SplitResult b = split(ds, 0.75, 5);
  CHECK(serialize_dataset(a.train) == serialize_dataset(b.train));
  CHECK(serialize_dataset(a.test) == serialize_dataset(b.test));

  std::vector<int> ids = a.train_original_ids;
  ids.insert(ids.end(), a.test_original_ids.begin(),
             a.test_original_ids.end());
  std::sort(ids.begin(), ids.end());
  std::vector<int> expected(static_cast<std::size_t>(ds.size()));
  for (int i = 0; i < ds.size(); ++i) {
    expected[static_cast<std::size_t>(i)] = i;
  }
  CHECK(ids == expected);

  // Mapped-back samples match the originals feature for feature.
  for (std::size_t j = 0; j < a.train_original_ids.size(); ++j) {
    const Sample& orig =
        ds.samples[static_cast<std::size_t>(a.train_original_ids[j])];
    CHECK(a.train.samples[j].features == orig.features);
    CHECK(a.train.samples[j].label == orig.label);
  }
}

TEST_CASE("dataset files round-trip losslessly") {
  const Dataset ds = inject_label_noise(generate_blobs(3, 4, 5, 0.7, 11),
                                        NoiseConfig{0.3, 4});
  std::stringstream buffer(serialize_dataset(ds, {"run cmd=test"}));
  const Dataset back = read_dataset(buffer, "<buffer>");
  CHECK(back == ds);
}

TEST_CASE("dataset parse errors carry line numbers") {
  SUBCASE("empty file") {
    std::stringstream empty("");
    CHECK_THROWS_WITH_AS(read_dataset(empty, "<empty>"),
                         doctest::Contains("missing header"), ParseError);
  }
  SUBCASE("label at K is rejected") {
    std::stringstream bad(
        "#moso-dataset v1 d=1 K=2 N=1\n"
        "0,2,0,0.5\n");
    try {
      read_dataset(bad, "<bad>");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("label out of range") !=
            std::string::npos);
    }
  }
  SUBCASE("wrong field count is a dimension mismatch") {
    std::stringstream bad(
        "#moso-dataset v1 d=2 K=2 N=1\n"
        "0,0,0,0.5\n");
    CHECK_THROWS_WITH_AS(read_dataset(bad, "<bad>"),
                         doctest::Contains("dimension mismatch"), ParseError);
  }
  SUBCASE("truncated body") {
    std::stringstream bad("#moso-dataset v1 d=1 K=2 N=2\n0,0,0,0.5\n");
    CHECK_THROWS_AS(read_dataset(bad, "<bad>"), ParseError);
  }
}

TEST_CASE("digest changes with content") {
  const Dataset a = generate_blobs(2, 3, 2, 0.4, 1);
  const Dataset b = generate_blobs(2, 3, 2, 0.4, 2);
  CHECK(dataset_digest(a) == dataset_digest(a));
  CHECK(dataset_digest(a) != dataset_digest(b));
}

}  // TEST_SUITE
