#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tvacal/adapters.hpp"
#include "tvacal/error.hpp"
#include "tvacal/io.hpp"
#include "tvacal/synthetic.hpp"

using namespace tvacal;

namespace {

SynthSpec spec_with(std::size_t classes, std::size_t samples, double tau, std::uint64_t seed) {
  SynthSpec spec;
  spec.classes = classes;
  spec.samples = samples;
  spec.temperature = tau;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(spec_with(1, 10, 1.0, 0).validate(), InvalidParameter);
  CHECK_THROWS_AS(spec_with(3, 0, 1.0, 0).validate(), InvalidParameter);
  CHECK_THROWS_AS(spec_with(3, 10, 0.0, 0).validate(), InvalidParameter);
  auto bad_scale = spec_with(3, 10, 1.0, 0);
  bad_scale.scale = -1.0;
  CHECK_THROWS_AS(generate(bad_scale), InvalidParameter);
}

TEST_CASE("generation is deterministic per seed") {
  const auto a = generate(spec_with(5, 200, 1.3, 42));
  const auto b = generate(spec_with(5, 200, 1.3, 42));
  const auto c = generate(spec_with(5, 200, 1.3, 43));
  CHECK(a == b);
  CHECK_FALSE(a == c);
  std::ostringstream ba, bb;
  write_binary(a, ba);
  write_binary(b, bb);
  CHECK(ba.str() == bb.str());
}

TEST_CASE("distortion scales logits and keeps labels") {
  const auto base = generate(spec_with(6, 300, 1.0, 7));
  const auto sharp = generate(spec_with(6, 300, 2.5, 7));
  CHECK(std::ranges::equal(base.labels(), sharp.labels()));
  for (std::size_t i = 0; i < base.size(); ++i)
    for (std::size_t k = 0; k < 6; ++k) REQUIRE(sharp.logits()(i, k) == 2.5 * base.logits()(i, k));
  const auto r0 = apply_calibrator(Calibrator::identity(), base);
  const auto r1 = apply_calibrator(Calibrator::identity(), sharp);
  CHECK(r0.raw.predicted == r1.raw.predicted);
  CHECK(r0.raw.accuracy() == r1.raw.accuracy());
}

TEST_CASE("undistorted data is calibrated") {
  const auto data = generate(spec_with(10, 10000, 1.0, 1));
  CHECK(evaluate(data, Calibrator::identity()).ece <= 0.02);
}

TEST_CASE("distortion direction") {
  const auto over = evaluate(generate(spec_with(10, 5000, 2.5, 2)), Calibrator::identity());
  CHECK(over.mean_confidence > over.accuracy);
  const auto under = evaluate(generate(spec_with(10, 5000, 0.5, 2)), Calibrator::identity());
  CHECK(under.mean_confidence < under.accuracy);
}

TEST_CASE("balance_classes keeps the first m samples of each class") {
  const LogitsDataset d(Matrix(6, 2, {0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 0, 1}), {0, 1, 1, 1, 0, 1});
  const auto b = balance_classes(d);
  CHECK(std::ranges::equal(b.labels(), std::vector<Label>{0, 1, 1, 0}));
  CHECK(b.logits().row(3)[1] == 1.0);
  const LogitsDataset missing(Matrix(2, 3, {0, 1, 2, 0, 1, 2}), {0, 1});
  CHECK_THROWS_AS(balance_classes(missing), InvalidInput);
}
