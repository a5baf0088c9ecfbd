#include "genderbias/encoder.hpp"

#include "fixtures.hpp"
#include "naive_reference.hpp"

#include <doctest.h>

#include <random>

using namespace genderbias;
using namespace genderbias::testing;

namespace {

double max_abs_diff(const Matrix& m, const naive::Grid& g) {
  REQUIRE(static_cast<std::size_t>(m.rows()) == g.size());
  double worst = 0;
  for (Index i = 0; i < m.rows(); ++i) {
    REQUIRE(static_cast<std::size_t>(m.cols()) == g[static_cast<std::size_t>(i)].size());
    for (Index j = 0; j < m.cols(); ++j)
      worst = std::max(worst, std::abs(m(i, j) - g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
  }
  return worst;
}

void set_tensor(RawContainer& raw, const std::string& name, double value) {
  for (double& v : raw.tensors.at(name).values) v = value;
}

}  // namespace

TEST_CASE("positions") {
  CHECK(num_positions(12) == 61);
  for (Index id = 0; id < 61; ++id) {
    const Position p = Position::from_id(id);
    CHECK(p.id() == id);
    CHECK(Position::parse(p.label()) == p);
  }
  CHECK(Position::embedding().label() == "Emb");
  CHECK(Position::at(PositionKind::kQuery, 0).label() == "L1Q");
  CHECK(Position::at(PositionKind::kAvgAttention, 11).label() == "L12A");
  CHECK(Position::at(PositionKind::kLayerOutput, 11).id() == 60);
  CHECK_FALSE(Position::parse("L0Q").has_value());
  CHECK_FALSE(Position::parse("L3X").has_value());
  CHECK_FALSE(Position::parse("").has_value());
}

TEST_CASE("embed") {
  const auto config = tiny_config(12, 16);

  SUBCASE("zero position/type embeddings and identity layer norm pass rows through") {
    RawContainer raw = make_synthetic_container(config, 4);
    set_tensor(raw, "embeddings.position", 0.0);
    set_tensor(raw, "embeddings.token_type", 0.0);
    set_tensor(raw, "embeddings.ln.gamma", 1.0);
    set_tensor(raw, "embeddings.ln.beta", 0.0);
    // Word rows that are already zero mean and unit variance.
    auto& word = raw.tensors.at("embeddings.word").values;
    for (std::size_t r = 0; r < 12; ++r)
      for (std::size_t j = 0; j < 8; ++j) word[r * 8 + j] = ((j + r) % 2 == 0) ? 1.0 : -1.0;
    const WeightStore store = validate_and_build(raw);
    const std::vector<TokenId> ids = {3, 7, 0};
    const Matrix x = embed(ids, store);
    for (std::size_t t = 0; t < ids.size(); ++t)
      for (Index j = 0; j < 8; ++j)
        CHECK(std::abs(x(static_cast<Index>(t), j) - word[static_cast<std::size_t>(ids[t]) * 8 + static_cast<std::size_t>(j)]) < 1e-9);
  }

  SUBCASE("matches the naive reference") {
    const RawContainer raw = make_synthetic_container(config, 5);
    const WeightStore store = validate_and_build(raw);
    const std::vector<TokenId> ids = {2, 5, 5, 11, 3};
    const auto ref = naive::forward(raw, {2, 5, 5, 11, 3});
    CHECK(max_abs_diff(embed(ids, store), ref.embedding) <= 1e-10);
    CHECK(embed(ids, store) == embed(ids, store));
  }

  SUBCASE("bad ids and over-long input") {
    const WeightStore store = make_synthetic_store(config, 6);
    CHECK_THROWS_AS((void)embed(std::vector<TokenId>{12}, store), EncoderError);
    CHECK_THROWS_AS((void)embed(std::vector<TokenId>{-1}, store), EncoderError);
    CHECK_THROWS_AS((void)embed(std::vector<TokenId>(17, 1), store), EncoderError);
    CHECK(embed(std::vector<TokenId>(16, 1), store).rows() == 16);
  }
}

TEST_CASE("attention_layer") {
  const auto config = tiny_config(12, 16);

  SUBCASE("single token: attention is [1] and avg equals V") {
    const WeightStore store = make_synthetic_store(config, 8);
    std::mt19937_64 rng(1);
    std::vector<Matrix> scores;
    const auto caps = attention_layer(random_matrix(rng, 1, 8), 0, store, &scores);
    REQUIRE(scores.size() == 2);
    for (const auto& as : scores) CHECK(as(0, 0) == 1.0);
    CHECK((caps.avg_attention - caps.v).cwiseAbs().maxCoeff() <= 1e-15);
  }

  SUBCASE("zero query and key weights give uniform attention") {
    RawContainer raw = make_synthetic_container(config, 9);
    for (const char* name : {"layer.0.attn.wq.weight", "layer.0.attn.wq.bias",
                             "layer.0.attn.wk.weight", "layer.0.attn.wk.bias"})
      set_tensor(raw, name, 0.0);
    const WeightStore store = validate_and_build(raw);
    std::mt19937_64 rng(2);
    std::vector<Matrix> scores;
    (void)attention_layer(random_matrix(rng, 5, 8), 0, store, &scores);
    for (const auto& as : scores)
      CHECK((as.array() - 0.2).abs().maxCoeff() <= 1e-15);
  }

  SUBCASE("attention rows are stochastic") {
    const WeightStore store = make_synthetic_store(config, 10, 1.5);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Matrix> scores;
      (void)attention_layer(random_matrix(rng, 1 + trial % 9, 8, 2.0), trial % 2, store, &scores);
      for (const auto& as : scores) {
        CHECK((as.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
        CHECK(as.minCoeff() > 0.0);
      }
    }
  }
}

TEST_CASE("forward_instrumented matches the naive reference") {
  const auto config = tiny_config(12, 16);
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const RawContainer raw = make_synthetic_container(config, seed);
    const WeightStore store = validate_and_build(raw);
    const std::vector<int> ids = {2, 4, 9, 1, 7, 3};
    const std::vector<TokenId> token_ids(ids.begin(), ids.end());
    const CaptureSet caps = forward_instrumented(token_ids, store);
    const auto ref = naive::forward(raw, ids);

    CHECK(caps.size() == 11);
    CHECK(caps.rows() == 6);
    CHECK(max_abs_diff(caps.embedding, ref.embedding) <= 1e-9);
    for (std::size_t l = 0; l < 2; ++l) {
      const auto& c = caps.layers[l];
      const auto& r = ref.layers[l];
      CHECK(max_abs_diff(c.q, r.q) <= 1e-9);
      CHECK(max_abs_diff(c.k, r.k) <= 1e-9);
      CHECK(max_abs_diff(c.v, r.v) <= 1e-9);
      CHECK(max_abs_diff(c.avg_attention, r.avg) <= 1e-9);
      CHECK(max_abs_diff(c.layer_out, r.out) <= 1e-9);
    }
    for (Index id = 0; id < caps.size(); ++id) CHECK(caps.at(Position::from_id(id)).rows() == 6);

    const CaptureSet again = forward_instrumented(token_ids, store);
    for (Index id = 0; id < caps.size(); ++id)
      CHECK(caps.at(Position::from_id(id)) == again.at(Position::from_id(id)));
  }
}

TEST_CASE("capture spill round trip") {
  const auto config = tiny_config(12, 16);
  const WeightStore store = make_synthetic_store(config, 14);
  const std::vector<TokenId> ids = {2, 6, 3};
  const CaptureSet caps = forward_instrumented(ids, store);
  TempDir dir("captures");
  write_capture_set(dir / "caps.bin", caps, ids);
  const RawContainer raw = read_container(dir / "caps.bin");
  CHECK(raw.tensors.size() == 11);
  CHECK(raw.tensors.contains("L2A"));
  CHECK(raw.metadata.at("token_ids") == nlohmann::json(ids));

  const CaptureSet back = read_capture_set(dir / "caps.bin");
  REQUIRE(back.size() == caps.size());
  for (Index id = 0; id < caps.size(); ++id) {
    const Position p = Position::from_id(id);
    // Spilled as float32.
    CHECK((back.at(p) - caps.at(p)).cwiseAbs().maxCoeff() <= 1e-5);
  }
}
