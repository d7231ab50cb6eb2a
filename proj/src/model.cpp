#include "agrlab/model.hpp"

#include <cmath>

#include "agrlab/errors.hpp"

namespace agrlab {

std::string head_name(Head h) {
    switch (h) {
        case Head::agreement: return "agreement";
        case Head::supertag: return "supertag";
        case Head::lm: return "lm";
    }
    return "?";
}

Head head_from_name(std::string_view name) {
    if (name == "agreement") return Head::agreement;
    if (name == "supertag") return Head::supertag;
    if (name == "lm") return Head::lm;
    throw ConfigError("unknown head name: " + std::string(name));
}

void ModelConfig::validate() const {
    if (d < 1) throw ConfigError("ModelConfig: d must be >= 1, got " + std::to_string(d));
    if (vocab_size < 2) {
        throw ConfigError("ModelConfig: vocab_size must be >= 2, got " + std::to_string(vocab_size));
    }
    if (heads.empty()) throw ConfigError("ModelConfig: at least one head required");
    if (has(Head::supertag) && n_supertags < 1) {
        throw ConfigError("ModelConfig: supertag head requires n_supertags >= 1");
    }
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
    ModelParams p;
    p.embedding = Matrix::Zero(cfg.vocab_size, cfg.d);
    for (Matrix* w : {&p.lstm.w_ix, &p.lstm.w_fx, &p.lstm.w_ox, &p.lstm.w_gx, &p.lstm.w_ih,
                      &p.lstm.w_fh, &p.lstm.w_oh, &p.lstm.w_gh}) {
        *w = Matrix::Zero(cfg.d, cfg.d);
    }
    for (Vector* b : {&p.lstm.b_i, &p.lstm.b_f, &p.lstm.b_o, &p.lstm.b_g}) {
        *b = Vector::Zero(cfg.d);
    }
    if (cfg.has(Head::agreement)) {
        p.head_agr_w = Vector::Zero(cfg.d);
        p.head_agr_b = Vector::Zero(1);
    }
    if (cfg.has(Head::supertag)) {
        p.head_st_w = Matrix::Zero(cfg.d, cfg.n_supertags);
        p.head_st_b = Vector::Zero(cfg.n_supertags);
    }
    if (cfg.has(Head::lm)) {
        p.head_lm_w = Matrix::Zero(cfg.d, cfg.vocab_size);
        p.head_lm_b = Vector::Zero(cfg.vocab_size);
    }
    return p;
}

namespace {

// fan_in x fan_out for the Glorot bound; orientation follows how each tensor
// is applied, not how it is stored.
struct Fan {
    double in, out;
};

Fan fan_of(std::string_view name, const ModelConfig& cfg) {
    const double d = cfg.d;
    if (name == "embedding") return {static_cast<double>(cfg.vocab_size), d};
    if (name == "head_agr.w") return {d, 1.0};
    if (name == "head_st.w") return {d, static_cast<double>(cfg.n_supertags)};
    if (name == "head_lm.w") return {d, static_cast<double>(cfg.vocab_size)};
    return {d, d};  // LSTM gate blocks
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, const Rng& rng) {
    cfg.validate();
    ModelParams p = ModelParams::zeros(cfg);
    for_each_tensor(
        cfg,
        [&](std::string_view name, auto& t) {
            const bool is_bias = name.find(".b") != std::string_view::npos;
            if (is_bias) {
                if (name == "lstm.b_f") t.setOnes();  // ease long-range credit early on
                return;
            }
            const Fan fan = fan_of(name, cfg);
            const double a = std::sqrt(6.0 / (fan.in + fan.out));
            Rng stream = rng.fork(name);
            auto* data = t.data();
            for (Eigen::Index i = 0; i < t.size(); ++i) data[i] = stream.uniform(-a, a);
        },
        p);
    return p;
}

ForwardTrace encode(const ModelParams& params, const ModelConfig& cfg,
                    std::span<const int> token_ids) {
    if (token_ids.empty()) throw ShapeError("encode: empty token sequence");
    const int d = cfg.d;
    const int T = static_cast<int>(token_ids.size());

    ForwardTrace tr;
    tr.token_ids.assign(token_ids.begin(), token_ids.end());
    for (auto* v : {&tr.x, &tr.z_i, &tr.z_f, &tr.z_o, &tr.z_g, &tr.i, &tr.f, &tr.o, &tr.g, &tr.c,
                    &tr.h}) {
        v->reserve(T);
    }

    Vector h_prev = Vector::Zero(d);
    Vector c_prev = Vector::Zero(d);
    for (int t = 0; t < T; ++t) {
        const int id = token_ids[t];
        if (id < 0 || id >= cfg.vocab_size) {
            throw VocabularyError("encode: token id " + std::to_string(id) +
                                  " out of range at position " + std::to_string(t));
        }
        Vector x = params.embedding.row(id).transpose();
        const auto& L = params.lstm;
        Vector z_i = L.w_ix * x + L.w_ih * h_prev + L.b_i;
        Vector z_f = L.w_fx * x + L.w_fh * h_prev + L.b_f;
        Vector z_o = L.w_ox * x + L.w_oh * h_prev + L.b_o;
        Vector z_g = L.w_gx * x + L.w_gh * h_prev + L.b_g;
        Vector i = sigmoid(z_i.array()).matrix();
        Vector f = sigmoid(z_f.array()).matrix();
        Vector o = sigmoid(z_o.array()).matrix();
        Vector g = z_g.array().tanh().matrix();
        Vector c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
        Vector h = o.cwiseProduct(c.array().tanh().matrix());

        tr.x.push_back(std::move(x));
        tr.z_i.push_back(std::move(z_i));
        tr.z_f.push_back(std::move(z_f));
        tr.z_o.push_back(std::move(z_o));
        tr.z_g.push_back(std::move(z_g));
        tr.i.push_back(std::move(i));
        tr.f.push_back(std::move(f));
        tr.o.push_back(std::move(o));
        tr.g.push_back(std::move(g));
        tr.c.push_back(c);
        tr.h.push_back(h);
        h_prev = std::move(h);
        c_prev = std::move(c);
    }
    return tr;
}

double head_agreement(const ModelParams& params, const Vector& h_last) {
    if (params.head_agr_w.size() != h_last.size()) {
        throw ShapeError("head_agreement: weight size " + std::to_string(params.head_agr_w.size()) +
                         " vs hidden size " + std::to_string(h_last.size()));
    }
    return sigmoid(params.head_agr_w.dot(h_last) + params.head_agr_b(0));
}

Vector head_logits(const ModelParams& params, const ModelConfig& cfg, const Vector& h,
                   Head which) {
    if (which == Head::agreement || !cfg.has(which)) {
        throw ConfigError("head_logits: head '" + head_name(which) + "' not available");
    }
    const Matrix& w = which == Head::supertag ? params.head_st_w : params.head_lm_w;
    const Vector& b = which == Head::supertag ? params.head_st_b : params.head_lm_b;
    return w.transpose() * h + b;
}

Vector head_softmax(const ModelParams& params, const ModelConfig& cfg, const Vector& h,
                    Head which) {
    return softmax(Vector(head_logits(params, cfg, h, which)));
}

void backward(const ModelParams& params, const ModelConfig& cfg, const ForwardTrace& trace,
              std::span<const Vector> output_grads, ModelParams& grads) {
    const int T = trace.length();
    const int d = cfg.d;
    if (static_cast<int>(output_grads.size()) != T) {
        throw ShapeError("backward: " + std::to_string(output_grads.size()) +
                         " output grads for trace of length " + std::to_string(T));
    }
    for (const Vector& g : output_grads) {
        if (g.size() != d) {
            throw ShapeError("backward: output grad size " + std::to_string(g.size()) +
                             " vs hidden size " + std::to_string(d));
        }
    }

    const auto& L = params.lstm;
    Vector dh_next = Vector::Zero(d);
    Vector dc_next = Vector::Zero(d);
    for (int t = T - 1; t >= 0; --t) {
        const Vector tc = trace.c[t].array().tanh().matrix();
        const Vector dh = output_grads[t] + dh_next;
        const Vector dout = dh.cwiseProduct(tc);
        Vector dc = dh.cwiseProduct(trace.o[t])
                        .cwiseProduct((1.0 - tc.array().square()).matrix()) +
                    dc_next;

        const Vector& i = trace.i[t];
        const Vector& f = trace.f[t];
        const Vector& o = trace.o[t];
        const Vector& g = trace.g[t];
        const Vector c_prev = t > 0 ? trace.c[t - 1] : Vector::Zero(d);
        const Vector h_prev = t > 0 ? trace.h[t - 1] : Vector::Zero(d);

        const Vector dz_i = dc.cwiseProduct(g).cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
        const Vector dz_f =
            dc.cwiseProduct(c_prev).cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
        const Vector dz_o = dout.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());
        const Vector dz_g = dc.cwiseProduct(i).cwiseProduct((1.0 - g.array().square()).matrix());

        const Vector& x = trace.x[t];
        grads.lstm.w_ix.noalias() += dz_i * x.transpose();
        grads.lstm.w_fx.noalias() += dz_f * x.transpose();
        grads.lstm.w_ox.noalias() += dz_o * x.transpose();
        grads.lstm.w_gx.noalias() += dz_g * x.transpose();
        grads.lstm.w_ih.noalias() += dz_i * h_prev.transpose();
        grads.lstm.w_fh.noalias() += dz_f * h_prev.transpose();
        grads.lstm.w_oh.noalias() += dz_o * h_prev.transpose();
        grads.lstm.w_gh.noalias() += dz_g * h_prev.transpose();
        grads.lstm.b_i += dz_i;
        grads.lstm.b_f += dz_f;
        grads.lstm.b_o += dz_o;
        grads.lstm.b_g += dz_g;

        const Vector dx = L.w_ix.transpose() * dz_i + L.w_fx.transpose() * dz_f +
                          L.w_ox.transpose() * dz_o + L.w_gx.transpose() * dz_g;
        grads.embedding.row(trace.token_ids[t]) += dx.transpose();

        dh_next = L.w_ih.transpose() * dz_i + L.w_fh.transpose() * dz_f +
                  L.w_oh.transpose() * dz_o + L.w_gh.transpose() * dz_g;
        dc_next = dc.cwiseProduct(f);
    }
}

ModelParams transfer_encoder(const ModelParams& from, const ModelParams& to) {
    if (from.embedding.rows() != to.embedding.rows() ||
        from.embedding.cols() != to.embedding.cols()) {
        throw ShapeError("transfer_encoder: embedding shape " +
                         shape_str(from.embedding.rows(), from.embedding.cols()) + " vs " +
                         shape_str(to.embedding.rows(), to.embedding.cols()));
    }
    ModelParams out = to;
    out.embedding = from.embedding;
    out.lstm = from.lstm;
    return out;
}

}  // namespace agrlab
