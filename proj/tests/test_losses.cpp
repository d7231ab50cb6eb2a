#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "agrlab/adagrad.hpp"
#include "agrlab/batch.hpp"
#include "agrlab/gradcheck.hpp"
#include "agrlab/losses.hpp"
#include "oracles.hpp"

using namespace agrlab;

namespace {

ModelConfig make_config(int d, int vocab, int tags) {
    ModelConfig cfg;
    cfg.d = d;
    cfg.vocab_size = vocab;
    cfg.n_supertags = tags;
    cfg.heads = {Head::agreement, Head::supertag, Head::lm};
    return cfg;
}

TaskBatch batch_of(Task task, const std::vector<TrainInstance>& instances, int pad = 0,
                   int eos = 1) {
    return make_batches(task, instances, static_cast<int>(instances.size()), pad, eos, nullptr,
                        false)
        .front();
}

// d = 1 model where token k produces hidden state tanh(tanh(embedding_k)):
// input and output gates saturated to 1, forget path irrelevant on
// one-token sentences. Used to engineer exact head probabilities.
ModelParams passthrough_model(const ModelConfig& cfg) {
    ModelParams p = ModelParams::zeros(cfg);
    p.lstm.b_i.setConstant(40.0);  // sigmoid(40) == 1.0 in double precision
    p.lstm.b_o.setConstant(40.0);
    p.lstm.w_gx.setConstant(1.0);
    return p;
}

double h_for_embedding(double e) { return std::tanh(std::tanh(e)); }
double embedding_for_h(double h) { return std::atanh(std::atanh(h)); }

}  // namespace

TEST_CASE("loss_agreement: chance predictions give ln 2") {
    const ModelConfig cfg = make_config(4, 6, 2);
    const ModelParams zeros = ModelParams::zeros(cfg);
    std::vector<TrainInstance> insts;
    for (int label : {0, 1, 1, 0}) {
        TrainInstance i;
        i.tokens = {1, 2, 3};
        i.agr_label = label;
        insts.push_back(i);
    }
    const LossResult lr = loss_agreement(zeros, cfg, batch_of(Task::agreement, insts));
    CHECK(lr.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(lr.denom == 4);
}

TEST_CASE("loss_agreement: confident correct predictions drive the loss to zero") {
    const ModelConfig cfg = make_config(3, 5, 2);
    ModelParams p = ModelParams::zeros(cfg);
    p.head_agr_b(0) = 50.0;  // p_plural == 1 - eps
    TrainInstance i;
    i.tokens = {1, 2};
    i.agr_label = 1;
    const LossResult lr = loss_agreement(p, cfg, batch_of(Task::agreement, {i, i}));
    CHECK(lr.loss < 1e-12);
}

TEST_CASE("loss_agreement: two sentences with p_correct 0.9 and 0.8") {
    const ModelConfig cfg = make_config(1, 4, 2);
    ModelParams p = passthrough_model(cfg);
    p.head_agr_w(0) = 10.0;
    // Token 0: p_plural = sigmoid(10 h) = 0.9, label plural  -> q = 0.9.
    // Token 1: p_plural = sigmoid(10 h) = 0.2, label singular -> q = 0.8.
    p.embedding(0, 0) = embedding_for_h(std::log(9.0) / 10.0);
    p.embedding(1, 0) = embedding_for_h(std::log(0.25) / 10.0);

    TrainInstance a, b;
    a.tokens = {0};
    a.agr_label = 1;
    b.tokens = {1};
    b.agr_label = 0;
    const LossResult lr = loss_agreement(p, cfg, batch_of(Task::agreement, {a, b}));
    CHECK(lr.loss == doctest::Approx(0.16425203348601802).epsilon(1e-9));
}

TEST_CASE("loss_agreement: batch without labels is rejected") {
    const ModelConfig cfg = make_config(3, 5, 2);
    const ModelParams p = ModelParams::zeros(cfg);
    TrainInstance i;
    i.tokens = {1, 2};
    TaskBatch batch = batch_of(Task::lm, {i});
    batch.task = Task::agreement;  // forged: no labels present
    CHECK_THROWS_AS(loss_agreement(p, cfg, batch), DataError);
}

TEST_CASE("loss_supertag: uniform predictions give ln S, including S = 452") {
    for (const int S : {5, 452}) {
        const ModelConfig cfg = make_config(3, 6, S);
        const ModelParams zeros = ModelParams::zeros(cfg);
        TrainInstance i;
        i.tokens = {1, 2, 3};
        i.tags = {0, S - 1, S / 2};
        const LossResult lr = loss_supertag(zeros, cfg, batch_of(Task::supertag, {i}));
        CHECK(lr.loss == doctest::Approx(std::log(double(S))).epsilon(1e-12));
    }
    CHECK(std::log(452.0) == doctest::Approx(6.1137).epsilon(1e-4));
}

TEST_CASE("loss_supertag: correct-tag probabilities 0.5, 0.25, 1.0 give ln 2") {
    const ModelConfig cfg = make_config(1, 4, 2);
    ModelParams p = passthrough_model(cfg);
    // p(correct tag 0) = sigmoid(60 h). Want 0.5, 0.25, ~1.0.
    p.head_st_w(0, 0) = 60.0;
    p.embedding(0, 0) = 0.0;                                       // h = 0     -> 0.5
    p.embedding(1, 0) = embedding_for_h(std::log(1.0 / 3.0) / 60.0);  // -> 0.25
    p.embedding(2, 0) = 30.0;  // h = tanh(tanh(30)) = 0.76..., 60 h = 45.7 -> 1.0
    CHECK(h_for_embedding(30.0) > 0.7);

    std::vector<TrainInstance> insts;
    for (int tok : {0, 1, 2}) {
        TrainInstance i;
        i.tokens = {tok};
        i.tags = {0};
        insts.push_back(i);
    }
    const LossResult lr = loss_supertag(p, cfg, batch_of(Task::supertag, insts));
    CHECK(lr.loss == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(lr.denom == 3);
}

TEST_CASE("loss_supertag: out-of-inventory label id") {
    const ModelConfig cfg = make_config(3, 6, 4);
    const ModelParams p = ModelParams::zeros(cfg);
    TrainInstance i;
    i.tokens = {1, 2};
    i.tags = {0, 4};  // 4 >= n_supertags
    CHECK_THROWS_AS(loss_supertag(p, cfg, batch_of(Task::supertag, {i})), LabelError);
}

TEST_CASE("loss_lm: uniform model gives ln N; every-token-0.1 gives ln 10") {
    const ModelConfig cfg = make_config(3, 10, 2);
    const ModelParams zeros = ModelParams::zeros(cfg);
    TrainInstance i;
    i.tokens = {2, 5, 7, 3};
    const LossResult lr = loss_lm(zeros, cfg, batch_of(Task::lm, {i}));
    CHECK(lr.loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    CHECK(lr.loss_bits == doctest::Approx(std::log2(10.0)).epsilon(1e-12));
}

TEST_CASE("loss_lm: token averaging uses Z = total tokens, not sentences") {
    const ModelConfig cfg = make_config(2, 7, 2);
    const ModelParams p = init_params(cfg, Rng(5));
    TrainInstance a, b;
    a.tokens = {1, 2};
    b.tokens = {3, 4, 5};
    const TaskBatch batch = batch_of(Task::lm, {a, b});
    const LossResult lr = loss_lm(p, cfg, batch);
    CHECK(lr.denom == 5);

    // Independent oracle: sum per-token -log p over both sentences, divide
    // by 5. Predictions come straight from encode + naive softmax.
    double total = 0.0;
    for (const TrainInstance& inst : {a, b}) {
        const ForwardTrace tr = encode(p, cfg, inst.tokens);
        for (size_t t = 0; t < inst.tokens.size(); ++t) {
            const int target = t + 1 < inst.tokens.size() ? inst.tokens[t + 1] : 1;
            const Vector logits = head_logits(p, cfg, tr.h[t], Head::lm);
            std::vector<double> raw(logits.data(), logits.data() + logits.size());
            total -= std::log(oracle::naive_softmax(raw)[target]);
        }
    }
    CHECK(lr.loss == doctest::Approx(total / 5.0).epsilon(1e-12));
}

TEST_CASE("combine_losses: hand values and degenerate r") {
    CHECK(combine_losses(2.0, 4.0, 1.0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(combine_losses(1.0, 2.0, 100.0) == doctest::Approx(1.9900990099009901).epsilon(1e-15));
    const double l1 = 0.123456789;
    CHECK(combine_losses(l1, 55.0, 0.0) == l1);  // bitwise
    CHECK_THROWS_AS(combine_losses(1.0, 2.0, -0.5), ConfigError);
}

TEST_CASE("combine_losses: weights sum to one and the mix is monotone") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const double r = rng.uniform(0.0, 200.0);
        const double w1 = 1.0 / (1.0 + r), w2 = r / (1.0 + r);
        CHECK(w1 + w2 == doctest::Approx(1.0).epsilon(1e-15));
        const double base = combine_losses(1.0, 2.0, r);
        CHECK(combine_losses(1.5, 2.0, r) >= base);
        CHECK(combine_losses(1.0, 2.5, r) >= base);
    }
}

TEST_CASE("combine_gradients at r = 0 reproduces g1 bit for bit") {
    const ModelConfig cfg = make_config(3, 5, 2);
    ModelParams g1 = init_params(cfg, Rng(1));
    ModelParams g2 = init_params(cfg, Rng(2));
    const ModelParams out = combine_gradients(cfg, g1, g2, 0.0);
    bool equal = true;
    for_each_tensor(
        cfg,
        [&](std::string_view, const auto& a, const auto& b) {
            for (Eigen::Index i = 0; i < a.size(); ++i) {
                if (a.data()[i] != b.data()[i]) equal = false;
            }
        },
        out, g1);
    CHECK(equal);
}

TEST_CASE("adagrad: zero grads change nothing") {
    const ModelConfig cfg = make_config(3, 5, 2);
    ModelParams p = init_params(cfg, Rng(4));
    const ModelParams before = p;
    AdaGradState state(cfg);
    adagrad_step(p, cfg, ModelParams::zeros(cfg), state, {0.1, std::nullopt, false});
    CHECK(p.embedding == before.embedding);
    CHECK(p.lstm.w_ih == before.lstm.w_ih);
    CHECK(state.accum.embedding.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adagrad: first step magnitude and shrinking updates") {
    const ModelConfig cfg = make_config(2, 4, 2);
    ModelParams p = ModelParams::zeros(cfg);
    ModelParams g = ModelParams::zeros(cfg);
    g.embedding(0, 0) = 3.0;
    AdaGradState state(cfg);
    adagrad_step(p, cfg, g, state, {0.1, std::nullopt, false});
    CHECK(p.embedding(0, 0) == doctest::Approx(-0.1).epsilon(1e-8));

    // Repeated identical gradients: steps shrink monotonically.
    double prev = std::abs(p.embedding(0, 0));
    double last_value = p.embedding(0, 0);
    for (int step = 0; step < 5; ++step) {
        adagrad_step(p, cfg, g, state, {0.1, std::nullopt, false});
        const double delta = std::abs(p.embedding(0, 0) - last_value);
        CHECK(delta < prev);
        prev = delta;
        last_value = p.embedding(0, 0);
    }
}

TEST_CASE("adagrad: accumulator is entrywise nondecreasing across a run") {
    const ModelConfig cfg = make_config(2, 4, 2);
    ModelParams p = init_params(cfg, Rng(7));
    AdaGradState state(cfg);
    Rng rng(8);
    ModelParams prev_accum = state.accum;
    for (int step = 0; step < 10; ++step) {
        ModelParams g = ModelParams::zeros(cfg);
        for_each_scalar(cfg, g, [&](std::string_view, Eigen::Index, double& v) {
            v = rng.uniform(-1.0, 1.0);
        });
        adagrad_step(p, cfg, g, state, {0.05, std::nullopt, false});
        bool nondecreasing = true;
        for_each_tensor(
            cfg,
            [&](std::string_view, const auto& now, const auto& before) {
                if ((now.array() < before.array()).any()) nondecreasing = false;
            },
            state.accum, prev_accum);
        CHECK(nondecreasing);
        prev_accum = state.accum;
    }
}

TEST_CASE("adagrad: non-finite gradient aborts the step untouched") {
    const ModelConfig cfg = make_config(2, 4, 2);
    ModelParams p = init_params(cfg, Rng(9));
    const ModelParams before = p;
    ModelParams g = ModelParams::zeros(cfg);
    g.lstm.w_ox(1, 1) = std::numeric_limits<double>::quiet_NaN();
    AdaGradState state(cfg);
    CHECK_THROWS_AS(adagrad_step(p, cfg, g, state, {0.1, std::nullopt, false}), NumericError);
    CHECK(p.lstm.w_ox == before.lstm.w_ox);
    CHECK(state.accum.lstm.w_ox.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("make_batches: sizes, order, and single appearance") {
    std::vector<TrainInstance> insts;
    for (int k = 0; k < 10; ++k) {
        TrainInstance i;
        i.tokens = {k + 2, k + 3};
        insts.push_back(i);
    }
    const auto plain = make_batches(Task::lm, insts, 4, 0, 1, nullptr, false);
    REQUIRE(plain.size() == 3);
    CHECK(plain[0].size() == 4);
    CHECK(plain[1].size() == 4);
    CHECK(plain[2].size() == 2);
    CHECK(plain[0].tokens(0, 0) == 2);  // order preserved without shuffle

    Rng rng(5);
    const auto shuffled = make_batches(Task::lm, insts, 4, 0, 1, &rng, true);
    std::multiset<int> seen, expected;
    for (const auto& b : shuffled) {
        for (int r = 0; r < b.size(); ++r) seen.insert(b.tokens(r, 0));
    }
    for (const auto& i : insts) expected.insert(i.tokens[0]);
    CHECK(seen == expected);
}

TEST_CASE("make_batches: mask marks exactly the real positions") {
    TrainInstance a, b;
    a.tokens = {1, 2, 3, 4, 5};
    b.tokens = {6};
    const TaskBatch batch = batch_of(Task::lm, {a, b});
    for (int t = 0; t < 5; ++t) CHECK(batch.mask(0, t) == 1.0);
    CHECK(batch.mask(1, 0) == 1.0);
    for (int t = 1; t < 5; ++t) {
        CHECK(batch.mask(1, t) == 0.0);
        CHECK(batch.tokens(1, t) == batch.pad_id);
    }
}

// Padded-batch losses equal the per-sentence unpadded computation. This is
// the oracle the acceptance suite re-runs on 100 random batches.
TEST_CASE("masked padding equivalence for all three losses") {
    const ModelConfig cfg = make_config(6, 30, 8);
    const ModelParams p = init_params(cfg, Rng(11));
    Rng rng(12);

    for (int trial = 0; trial < 5; ++trial) {
        std::vector<TrainInstance> insts;
        const int B = 4 + static_cast<int>(rng.below(4));
        for (int k = 0; k < B; ++k) {
            TrainInstance i;
            const int len = 1 + static_cast<int>(rng.below(7));
            for (int t = 0; t < len; ++t) i.tokens.push_back(2 + static_cast<int>(rng.below(28)));
            i.agr_label = static_cast<int>(rng.below(2));
            for (int t = 0; t < len; ++t) i.tags.push_back(static_cast<int>(rng.below(8)));
            insts.push_back(i);
        }

        for (Task task : {Task::agreement, Task::supertag, Task::lm}) {
            const TaskBatch padded = batch_of(task, insts);
            const LossResult batched = compute_loss(task, p, cfg, padded);

            double weighted = 0.0;
            long denom = 0;
            for (const TrainInstance& inst : insts) {
                const TaskBatch one = batch_of(task, {inst});
                const LossResult lr = compute_loss(task, p, cfg, one);
                weighted += lr.loss * static_cast<double>(lr.denom);
                denom += lr.denom;
            }
            CHECK(batched.denom == denom);
            CHECK(std::abs(batched.loss - weighted / static_cast<double>(denom)) < 1e-12);
        }
    }
}

TEST_CASE("padding content never contributes to the loss") {
    const ModelConfig cfg = make_config(4, 20, 5);
    const ModelParams p = init_params(cfg, Rng(13));
    TrainInstance a, b;
    a.tokens = {2, 3, 4, 5};
    a.agr_label = 1;
    b.tokens = {6};
    b.agr_label = 0;
    TaskBatch batch = batch_of(Task::agreement, {a, b});
    const double before = loss_agreement(p, cfg, batch).loss;
    batch.tokens(1, 2) = 17;  // scribble on a padded cell
    batch.tokens(1, 3) = 9;
    const double after = loss_agreement(p, cfg, batch).loss;
    CHECK(before == after);
}
