#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "hyperite/params.hpp"
#include "hyperite/rng.hpp"

using namespace hyperite;

TEST_CASE("linalg basics") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
  Vec r_in{-2.0, 3.5}, r_out(2);
  relu(r_in, r_out);
  CHECK(r_out[0] == 0.0);
  CHECK(r_out[1] == 3.5);

  Vec a{1.0, 2.0, 3.0}, b{4.0, -5.0, 6.0};
  CHECK(dot(a, b) == doctest::Approx(12.0));
  CHECK(norm(b) == doctest::Approx(std::sqrt(77.0)));

  DenseMatrix m(2, 3);
  m.at(0, 0) = 1;
  m.at(0, 1) = 2;
  m.at(0, 2) = 3;
  m.at(1, 0) = 4;
  m.at(1, 1) = 5;
  m.at(1, 2) = 6;
  Vec bias{1.0, -1.0}, out(2);
  affine(m, a, bias, out);
  CHECK(out[0] == doctest::Approx(15.0));
  CHECK(out[1] == doctest::Approx(31.0));

  CHECK(all_finite(a));
  Vec bad{1.0, std::nan("")};
  CHECK(!all_finite(bad));
}

TEST_CASE("matrix init bounds and determinism") {
  ParamStore p1, p2;
  Tensor& w1 = p1.add_matrix("w", 8, 16, stream_seed(3, "w"));
  Tensor& w2 = p2.add_matrix("w", 8, 16, stream_seed(3, "w"));
  const double bound = 1.0 / std::sqrt(16.0);
  for (double v : w1.value) {
    CHECK(v >= -bound);
    CHECK(v <= bound);
  }
  CHECK(w1.value == w2.value);

  ParamStore p3;
  Tensor& w3 = p3.add_matrix("w", 8, 16, stream_seed(4, "w"));
  CHECK(w1.value != w3.value);

  Tensor& b = p1.add_bias("b", 8);
  for (double v : b.value) CHECK(v == 0.0);
}

TEST_CASE("independent streams: adding a tensor does not shift another") {
  ParamStore p1;
  p1.add_matrix("a", 4, 4, stream_seed(0, "a"));
  p1.add_matrix("b", 4, 4, stream_seed(0, "b"));

  ParamStore p2;
  p2.add_matrix("b", 4, 4, stream_seed(0, "b"));

  CHECK(p1.get("b").value == p2.get("b").value);
}

TEST_CASE("squared l2 and decay gradient") {
  ParamStore p;
  Tensor& w = p.add_bias("w", 3);
  w.value = {1.0, -2.0, 3.0};
  CHECK(p.squared_l2() == doctest::Approx(14.0));
  p.zero_grads();
  p.accumulate_l2_grad(0.5);
  CHECK(w.grad[0] == doctest::Approx(1.0));
  CHECK(w.grad[1] == doctest::Approx(-2.0));
  CHECK(w.grad[2] == doctest::Approx(3.0));
  CHECK(p.grads_finite());
  w.grad[1] = std::nan("");
  std::string who;
  CHECK(!p.grads_finite(&who));
  CHECK(who == "w");
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  ParamStore p;
  p.add_matrix("enc.0.W", 5, 7, stream_seed(42, "enc.0.W"));
  p.add_bias("enc.0.b", 5);
  p.get("enc.0.b").value[2] = 0x1.fffffffffffffp-3;

  auto path = std::filesystem::temp_directory_path() / "hyperite_ckpt_test.bin";
  save_params(p, path.string(), "{\"seed\":42}");

  std::string cfg;
  ParamStore q = load_params(path.string(), &cfg);
  CHECK(cfg == "{\"seed\":42}");
  REQUIRE(q.tensors().size() == p.tensors().size());
  for (size_t i = 0; i < p.tensors().size(); ++i) {
    CHECK(q.tensors()[i].name == p.tensors()[i].name);
    CHECK(q.tensors()[i].rows == p.tensors()[i].rows);
    CHECK(q.tensors()[i].cols == p.tensors()[i].cols);
    CHECK(q.tensors()[i].value == p.tensors()[i].value);  // exact, not approximate
  }
  std::filesystem::remove(path);
}

TEST_CASE("loading garbage fails") {
  auto path = std::filesystem::temp_directory_path() / "hyperite_ckpt_garbage.bin";
  {
    FILE* f = std::fopen(path.string().c_str(), "wb");
    std::fputs("not a checkpoint", f);
    std::fclose(f);
  }
  CHECK_THROWS(load_params(path.string(), nullptr));
  std::filesystem::remove(path);
}

TEST_CASE("stream seeds differ across labels and indices") {
  CHECK(stream_seed(0, "a") != stream_seed(0, "b"));
  CHECK(stream_seed(0, "a", 0) != stream_seed(0, "a", 1));
  CHECK(stream_seed(0, "a") != stream_seed(1, "a"));
  CHECK(stream_seed(5, "x", 2) == stream_seed(5, "x", 2));
}
