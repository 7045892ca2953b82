#include <doctest.h>

#include <cmath>
#include <string>

#include "helpers.hpp"
#include "model_checks.hpp"
#include "mvgae/gradcheck.hpp"
#include "mvgae/graph.hpp"
#include "mvgae/models.hpp"

using namespace mvgae;
using testing::random_matrix;

namespace {

ModelOptions small_options(std::uint64_t seed = 1) {
  ModelOptions o;
  o.train.hidden_units = 8;
  o.train.second_layer_units = 4;
  o.train.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("mvgcn_embed examples") {
  const Matrix a{{0.5, 0.5, 0}, {0.5, 0.25, 0.25}, {0, 0.25, 0.75}};
  const Matrix x{{1, 0}, {0, 1}, {1, 1}};
  const Matrix z = mvgcn_embed(x, a, Matrix{{1, -1}, {0.5, 2}}, Matrix{{1, 0}, {-1, 1}});
  const Matrix expected{{0.531209373373756, 0.468790626626244},
                        {0.422504634814188, 0.577495365185812},
                        {0.307358016865264, 0.692641983134736}};
  CHECK(max_abs_diff(z, expected) < 1e-14);

  Rng rng(1);
  const Matrix uniform = mvgcn_embed(random_matrix(5, 7, rng), normalize_adjacency(testing::random_symmetric(5, rng)),
                                     random_matrix(7, 3, rng), Matrix(3, 4));
  CHECK(uniform.rows() == 5);
  CHECK(uniform.cols() == 4);
  for (double v : uniform.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("concat_embeddings layout") {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{5, 6, 7}, {8, 9, 10}};
  const std::vector<Matrix> one{a};
  CHECK(concat_embeddings(one) == a);
  const std::vector<Matrix> two{a, b};
  const Matrix z = concat_embeddings(two);
  CHECK(z.cols() == 5);
  for (std::size_t j = 2; j < 5; ++j) CHECK(z(1, j) == b(1, j - 2));
}

TEST_CASE("bilinear_link_score examples") {
  CHECK(bilinear_link_score(Matrix{{1, 2}}, Matrix{{3, 4}}, Matrix(2, 2)) == 0.5);
  CHECK(bilinear_link_score(Matrix{{1, 0}}, Matrix{{0, 1}}, Matrix{{0, 2}, {0, 0}}) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
  const Matrix w{{0.3, -1}, {-1, 2}};
  CHECK(bilinear_link_score(Matrix{{0.2, 0.7}}, Matrix{{-1, 0.4}}, w) ==
        doctest::Approx(bilinear_link_score(Matrix{{-1, 0.4}}, Matrix{{0.2, 0.7}}, w)).epsilon(1e-15));
}

TEST_CASE("gae encode and decode examples") {
  const Matrix a{{0.6, 0.4}, {0.4, 0.6}};
  const Matrix z = gae_encode(Matrix::identity(2), a, Matrix::identity(2));
  CHECK(max_abs_diff(z, Matrix{{0.549833997312478, 0.450166002687522},
                               {0.450166002687522, 0.549833997312478}}) < 1e-14);
  const Matrix x_prime = gae_decode(z, a, Matrix{{2, 0}, {0, -1}});
  CHECK(max_abs_diff(x_prime, Matrix{{0.734959665140252, 0.379885746489905},
                                     {0.72712139156712, 0.375201308544842}}) < 1e-14);

  Rng rng(2);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix flat = gae_encode(x, normalize_adjacency(testing::random_symmetric(4, rng)), Matrix(3, 5));
  for (double v : flat.data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
  const Matrix w0 = random_matrix(3, 5, rng);
  CHECK(max_abs_diff(gae_encode(x, Matrix::identity(4), w0), row_softmax(matmul(x, w0))) < 1e-15);
  const Matrix dec = gae_decode(random_matrix(4, 5, rng), Matrix::identity(4), Matrix(5, 3));
  CHECK(dec == Matrix(4, 3, 0.5));
}

TEST_CASE("reconstruction_loss examples") {
  const Matrix x{{1, 0}};
  CHECK(reconstruction_loss(x, x) == 0.0);
  CHECK(reconstruction_loss(x, Matrix{{0.5, 0.5}}) == 0.5);
  Rng rng(3);
  for (int k = 0; k < 10; ++k) CHECK(reconstruction_loss(random_matrix(3, 3, rng), random_matrix(3, 3, rng)) >= 0.0);
}

TEST_CASE("label_head examples") {
  Rng rng(4);
  const Matrix z = random_matrix(4, 3, rng);
  const Matrix flat = label_head(z, Matrix(3, 5), Matrix(1, 5), HeadMode::softmax);
  for (double v : flat.data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(label_head(z, Matrix(3, 5), Matrix(1, 5), HeadMode::sigmoid) == Matrix(4, 5, 0.5));
  const Matrix p = label_head(z, random_matrix(3, 5, rng), random_matrix(1, 5, rng), HeadMode::softmax);
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (double v : p.row(i)) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("supervised_loss examples") {
  const Matrix y{{0, 1, 0}};
  CHECK(supervised_loss(y, y, HeadMode::softmax) == 0.0);
  CHECK(supervised_loss(Matrix{{1}}, Matrix{{0.5}}, HeadMode::softmax) == doctest::Approx(std::log(2.0)));
  CHECK(supervised_loss(Matrix{{1}}, Matrix{{0.5}}, HeadMode::sigmoid) == doctest::Approx(std::log(2.0)));
  CHECK(supervised_loss(Matrix{{1, 0}}, Matrix{{0.5, 0.5}}, HeadMode::sigmoid) ==
        doctest::Approx(2.0 * std::log(2.0)));
  CHECK(supervised_loss(y, Matrix{{0.2, 0.7, 0.1}}, HeadMode::softmax) <
        supervised_loss(y, Matrix{{0.2, 0.6, 0.1}}, HeadMode::softmax));
  // The 1e-12 floor keeps a zero prediction finite.
  CHECK(std::isfinite(supervised_loss(Matrix{{1}}, Matrix{{0.0}}, HeadMode::softmax)));
}

TEST_CASE("semi_supervised_loss arithmetic") {
  CHECK(semi_supervised_loss(2.0, 3.0, 0.0) == 2.0);
  CHECK(semi_supervised_loss(2.0, 3.0, 1.0) == 5.0);
  CHECK_THROWS_AS(semi_supervised_loss(2.0, 3.0, -1.0), std::invalid_argument);
}

TEST_CASE("transductive_forward examples") {
  Rng rng(5);
  const std::size_t n = 8, m = 8;
  const Split split = drug_holdout_split(n, 0.25, 0.2, 1);
  const Matrix a = normalize_adjacency(testing::random_symmetric(n, rng));
  Matrix y(n, m);
  for (double& v : y.data()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
  std::vector<std::size_t> known;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::binary_search(split.test.begin(), split.test.end(), i)) known.push_back(i);
  const Matrix w0 = random_matrix(m, 4, rng), w1 = random_matrix(4, m, rng);

  const auto out = transductive_forward(take_rows(y, known), take_rows(y, split.test), split, a, w0, w1);
  const Matrix full = gae_decode(gae_encode(y, a, w0), a, w1);
  CHECK(out.train == take_rows(full, known));
  CHECK(out.test == take_rows(full, split.test));
  CHECK(out.train.rows() == n - split.test.size());
  CHECK(out.test.rows() == split.test.size());

  const auto zero = transductive_forward(Matrix(known.size(), m), Matrix(split.test.size(), m), split, a,
                                         Matrix(m, 4), Matrix(4, m));
  CHECK(zero.train == Matrix(known.size(), m, 0.5));
  CHECK(zero.test == Matrix(split.test.size(), m, 0.5));
  CHECK_THROWS_AS(transductive_forward(Matrix(1, m), Matrix(split.test.size(), m), split, a, w0, w1),
                  std::invalid_argument);
}

TEST_CASE("transductive_objective examples") {
  const Matrix half_train(6, 4, 0.5), half_test(2, 4, 0.5);
  CHECK(transductive_objective(half_train, Matrix(6, 4), half_test, Matrix(2, 4), 3.0) == 0.25 * 32);
  const Matrix y{{1, 0}}, t{{0.2, 0.9}};
  CHECK(transductive_objective(y, y, t, t, 0.0) == 0.0);
  CHECK(transductive_objective(y, y, t, t, 2.0) == doctest::Approx(2.0 * (0.04 + 0.81)));
}

TEST_CASE("every variant's objective passes a finite-difference check") {
  Rng rng(6);
  const auto ds = testing::random_dataset(12, 3, rng);
  const Split split = drug_holdout_split(ds, 0.25, 0.2, 2);
  const auto problem = make_problem(ds, split);
  for (auto head : {HeadMode::sigmoid, HeadMode::softmax}) {
    for (auto v : {Variant::mvgcn, Variant::semigae, Variant::attsemigae, Variant::transgae,
                   Variant::atttransgae}) {
      CAPTURE(to_string(head));
      CAPTURE(to_string(v));
      auto o = small_options();
      o.train.head_mode = head;
      auto model = make_model(v, problem, o);
      // Move the latent rows and biases off their zero initialization.
      for (auto& p : model->parameters())
        for (double& x : p.data()) x += rng.uniform(-0.3, 0.3);
      // MVGCN's step is capped by its ReLU margin, which raises its rounding floor.
      const double bound = v == Variant::mvgcn ? 1e-4 : 1e-5;
      CHECK(testing::check_model_gradients(*model).max_relative_error < bound);
    }
  }
}

TEST_CASE("parameters are registered with their documented shapes") {
  Rng rng(7);
  const auto ds = testing::random_dataset(10, 2, rng, 5);
  const Split split = drug_holdout_split(ds, 0.3, 0.2, 1);
  const auto problem = make_problem(ds, split);
  auto trans = make_model(Variant::atttransgae, problem, small_options());
  const auto& latent = trans->parameters()[trans->parameter_index("y_test_latent")];
  CHECK(latent.rows() == 3);
  CHECK(latent.cols() == 10);
  CHECK(trans->parameters()[trans->parameter_index("attention_w/v1")].cols() == 10);
  auto semi = make_model(Variant::semigae, problem, small_options());
  CHECK(semi->parameters()[semi->parameter_index("w0")].rows() == 10);
  CHECK(semi->parameters()[semi->parameter_index("head_w")].cols() == 10);
  CHECK_THROWS_AS(semi->parameter_index("nope"), std::invalid_argument);
  CHECK_THROWS_AS(semi->attention(), std::invalid_argument);
}

TEST_CASE("semigae refuses featureless views unless one-hot features are requested") {
  Rng rng(8);
  auto ds = testing::random_dataset(10, 2, rng);
  for (auto& v : ds.views) v.features.reset();
  const auto problem = make_problem(ds, drug_holdout_split(ds, 0.3, 0.2, 1));
  CHECK_THROWS_AS(make_model(Variant::semigae, problem, small_options()), std::invalid_argument);
  auto o = small_options();
  o.one_hot_missing_features = true;
  auto model = make_model(Variant::semigae, problem, o);
  CHECK(static_cast<const SemiGaeModel&>(*model).features() == Matrix::identity(10));
  CHECK_NOTHROW(make_model(Variant::transgae, problem, small_options()));
}

TEST_CASE("identical views make the attentive model match the single-view model") {
  Rng rng(9);
  auto ds = testing::random_dataset(14, 1, rng);
  const Split split = drug_holdout_split(ds, 0.25, 0.2, 3);
  const auto single = make_problem(ds, split);
  ds.views.push_back(ds.views[0]);
  ds.views.push_back(ds.views[0]);
  ds.views[1].name = "copy1";
  ds.views[2].name = "copy2";
  ds.views[1].features.reset();
  ds.views[2].features.reset();
  const auto triple = make_problem(ds, split);

  auto plain = make_model(Variant::semigae, single, small_options());
  auto att = make_model(Variant::attsemigae, triple, small_options());
  for (const auto& name : plain->parameter_names())
    att->parameters()[att->parameter_index(name)] = plain->parameters()[plain->parameter_index(name)];
  for (std::size_t u = 0; u < 3; ++u) {
    auto& b = att->parameters()[att->parameter_index("attention_b/" + triple->view_names[u])];
    for (double& x : b.data()) x = rng.uniform(-2.0, 2.0);
  }
  plain->mark_trained();
  att->mark_trained();
  CHECK(max_abs_diff(plain->predict(), att->predict()) < 1e-12);
}

TEST_CASE("lambda = 0 and mu = 0 train to finite losses") {
  Rng rng(10);
  const auto ds = testing::random_dataset(12, 2, rng);
  const auto problem = make_problem(ds, drug_holdout_split(ds, 0.25, 0.2, 1));
  auto o = small_options();
  o.train.lambda = 0.0;
  o.train.mu = 0.0;
  o.train.max_epochs = 25;
  for (auto v : {Variant::semigae, Variant::attsemigae, Variant::transgae, Variant::atttransgae}) {
    auto model = make_model(v, problem, o);
    const auto h = train(*model, o.train);
    for (const auto& e : h.epochs) CHECK(std::isfinite(e.train_loss));
    Rng drop(0);
    std::vector<Matrix> grads;
    model->loss_and_gradients(drop, grads);
    for (const auto& g : grads) CHECK(g.all_finite());
  }
}

TEST_CASE("validation is deterministic and predictions are sigmoid scores") {
  Rng rng(11);
  const auto ds = testing::random_dataset(12, 3, rng);
  const auto problem = make_problem(ds, drug_holdout_split(ds, 0.25, 0.2, 4));
  for (auto v : {Variant::mvgcn, Variant::semigae, Variant::attsemigae, Variant::transgae,
                 Variant::atttransgae}) {
    auto o = small_options();
    o.train.max_epochs = 5;
    auto model = make_model(v, problem, o);
    CHECK_THROWS_AS(model->predict(), std::logic_error);
    train(*model, o.train);
    const auto e1 = model->validate();
    const auto e2 = model->validate();
    CHECK(e1.loss == e2.loss);
    const Matrix s1 = model->predict();
    CHECK(s1 == model->predict());
    CHECK(s1.rows() == 12);
    CHECK(s1.cols() == 12);
    for (double x : s1.data()) {
      CHECK(x > 0.0);
      CHECK(x < 1.0);
    }
    if (is_attentive(v)) {
      const Matrix w = model->attention();
      for (std::size_t i = 0; i < w.cols(); ++i) {
        double s = 0.0;
        for (std::size_t u = 0; u < w.rows(); ++u) s += w(u, i);
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("training is reproducible for a fixed seed") {
  Rng rng(12);
  const auto ds = testing::random_dataset(12, 2, rng);
  const auto problem = make_problem(ds, drug_holdout_split(ds, 0.25, 0.2, 5));
  auto o = small_options(7);
  o.train.max_epochs = 15;
  auto a = make_model(Variant::attsemigae, problem, o);
  auto b = make_model(Variant::attsemigae, problem, o);
  CHECK(train(*a, o.train).to_csv() == train(*b, o.train).to_csv());
  CHECK(a->predict() == b->predict());
}

TEST_CASE("transgae test predictions are the test rows of the reconstruction") {
  Rng rng(13);
  const auto ds = testing::random_dataset(10, 1, rng);
  const Split split = drug_holdout_split(ds, 0.3, 0.2, 6);
  const auto problem = make_problem(ds, split);
  auto o = small_options();
  o.train.max_epochs = 10;
  o.train.dropout = 0.0;
  auto model = make_model(Variant::transgae, problem, o);
  train(*model, o.train);
  const auto& p = model->parameters();
  Matrix observed = hadamard(ds.labels.values, problem->train_mask);
  std::vector<std::size_t> known;
  for (std::size_t i = 0; i < 10; ++i)
    if (problem->roles[i] != NodeRole::test) known.push_back(i);
  const auto out = transductive_forward(take_rows(observed, known), p[model->parameter_index("y_test_latent")],
                                        split, problem->norm_adjacency[0], p[model->parameter_index("w0")],
                                        p[model->parameter_index("w1")]);
  const Matrix scores = model->predict();
  CHECK(max_abs_diff(take_rows(scores, split.test), out.test) < 1e-15);
}

TEST_CASE("latent test labels shrink as mu grows") {
  Rng rng(14);
  const auto ds = testing::random_dataset(16, 2, rng);
  const auto problem = make_problem(ds, drug_holdout_split(ds, 0.25, 0.2, 7));
  auto o = small_options();
  o.train.max_epochs = 60;
  auto model = make_model(Variant::transgae, problem, o);
  train(*model, o.train);
  auto& trans = static_cast<TransGaeModel&>(*model);
  const std::size_t idx = model->parameter_index("y_test_latent");
  const Matrix start = trans.latent();
  const Matrix w0 = model->parameters()[model->parameter_index("w0")];
  double previous = INFINITY;
  for (double mu : {0.01, 0.1, 1.0, 10.0}) {
    model->parameters()[idx] = start;
    trans.refit_latent(mu, 400);
    const double norm = trans.latent().squared_norm();
    CHECK(norm < previous);
    previous = norm;
  }
  CHECK(model->parameters()[model->parameter_index("w0")] == w0);
}
