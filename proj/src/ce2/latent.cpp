#include "ce2/latent.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace ce2 {

LatentSpace::LatentSpace(int state_dim, int hidden_width, int embed_dim, double init_scale,
                         double learning_rate, double momentum, std::uint64_t seed)
    : embedder_(state_dim, hidden_width, embed_dim, OutputSquash::None, init_scale,
                derive_seed(seed, 101)),
      decoder_(embed_dim, hidden_width, state_dim, OutputSquash::None, init_scale,
               derive_seed(seed, 102)),
      opt_(learning_rate, momentum, embedder_.param_count() + decoder_.param_count()),
      learning_rate_(learning_rate),
      momentum_(momentum),
      seed_(seed) {}

LatentSpace::LatentSpace(TwoLayerNet embedder, TwoLayerNet decoder, double learning_rate,
                         double momentum)
    : embedder_(std::move(embedder)),
      decoder_(std::move(decoder)),
      opt_(learning_rate, momentum, embedder_.param_count() + decoder_.param_count()),
      learning_rate_(learning_rate),
      momentum_(momentum) {}

LatentSpace LatentSpace::identity(int dim) {
    return LatentSpace(TwoLayerNet::identity_map(dim), TwoLayerNet::identity_map(dim), 0.0, 0.0);
}

Vec LatentSpace::embed(const Vec& state) const { return embedder_.forward(state); }

Vec LatentSpace::decode(const Vec& embedding) const { return decoder_.forward(embedding); }

Vec LatentSpace::decode_goal(const Vec& embedding, const EnvSpec& spec) const {
    return clip_to_bounds(spec, decoder_.forward(embedding));
}

double LatentSpace::loss_dt(const TemporalDistanceEstimator& est, const Vec& s1,
                            const Vec& s2) const {
    const Vec e1 = embed(s1);
    const Vec e2 = embed(s2);
    const double target = 0.5 * (est.distance(e1, e2) + est.distance(e2, e1));
    const double sq = squared_distance(e1, e2);
    const double gap = (use_linear_dt_norm ? std::sqrt(sq) : sq) - target;
    return gap * gap;
}

double LatentSpace::loss_rec(const Vec& state) const {
    return squared_distance(decode(embed(state)), state);
}

LatentLosses LatentSpace::batch_losses(const TemporalDistanceEstimator& est,
                                       const std::vector<std::pair<Vec, Vec>>& batch) const {
    if (batch.empty()) throw std::invalid_argument("latent: empty batch");
    LatentLosses l;
    for (const auto& [s1, s2] : batch) {
        l.dt += loss_dt(est, s1, s2);
        l.rec += 0.5 * (loss_rec(s1) + loss_rec(s2));
    }
    l.dt /= static_cast<double>(batch.size());
    l.rec /= static_cast<double>(batch.size());
    return l;
}

std::vector<double> LatentSpace::batch_gradient(const TemporalDistanceEstimator& est,
                                                const std::vector<std::pair<Vec, Vec>>& batch,
                                                bool include_rec, bool include_dt) const {
    if (batch.empty()) throw std::invalid_argument("latent: empty batch");
    const std::size_t ne = embedder_.param_count();
    std::vector<double> grad(ne + decoder_.param_count(), 0.0);
    std::vector<double> emb_grad(ne, 0.0);
    std::vector<double> dec_grad(decoder_.param_count(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    TwoLayerNet::Tape tape1, tape2, dec_tape;
    for (const auto& [s1, s2] : batch) {
        const Vec e1 = embedder_.forward(s1, tape1);
        const Vec e2 = embedder_.forward(s2, tape2);

        // geometry term; D_t outputs are constants here (stop-gradient)
        Vec d_e1(e1.size(), 0.0);
        if (include_dt) {
            const double target = 0.5 * (est.distance(e1, e2) + est.distance(e2, e1));
            Vec delta(e1.size());
            for (std::size_t i = 0; i < e1.size(); ++i) delta[i] = e1[i] - e2[i];
            const double sq = squared_norm(delta);
            if (use_linear_dt_norm) {
                const double norm = std::sqrt(sq);
                if (norm > 1e-12) {
                    const double coeff = 2.0 * (norm - target) / norm * inv_n;
                    for (std::size_t i = 0; i < e1.size(); ++i) d_e1[i] = coeff * delta[i];
                }
            } else {
                const double coeff = 4.0 * (sq - target) * inv_n;
                for (std::size_t i = 0; i < e1.size(); ++i) d_e1[i] = coeff * delta[i];
            }
        }
        Vec d_e2(e1.size());
        for (std::size_t i = 0; i < e1.size(); ++i) d_e2[i] = -d_e1[i];

        // reconstruction terms, averaged over the two pair members
        for (int m = 0; include_rec && m < 2; ++m) {
            const Vec& s = (m == 0) ? s1 : s2;
            const TwoLayerNet::Tape& etape = (m == 0) ? tape1 : tape2;
            Vec& d_e = (m == 0) ? d_e1 : d_e2;
            const Vec recon = decoder_.forward(etape.y, dec_tape);
            Vec d_recon(recon.size());
            for (std::size_t i = 0; i < recon.size(); ++i) {
                d_recon[i] = 2.0 * (recon[i] - s[i]) * 0.5 * inv_n;
            }
            Vec d_z;
            decoder_.backward(dec_tape, d_recon, dec_grad, &d_z);
            for (std::size_t i = 0; i < d_e.size(); ++i) d_e[i] += d_z[i];
        }

        embedder_.backward(tape1, d_e1, emb_grad, nullptr);
        embedder_.backward(tape2, d_e2, emb_grad, nullptr);
    }
    std::copy(emb_grad.begin(), emb_grad.end(), grad.begin());
    std::copy(dec_grad.begin(), dec_grad.end(), grad.begin() + static_cast<std::ptrdiff_t>(ne));
    return grad;
}

LatentLosses LatentSpace::train_step(const TemporalDistanceEstimator& est,
                                     const std::vector<std::pair<Vec, Vec>>& batch) {
    const LatentLosses losses = batch_losses(est, batch);
    auto grad = batch_gradient(est, batch);
    const double norm = std::sqrt(squared_norm(grad));
    if (norm > max_grad_norm) {
        const double scale = max_grad_norm / norm;
        for (auto& g : grad) g *= scale;
    }
    auto flat = parameters();
    opt_.step(flat, grad);
    set_parameters(flat);
    return losses;
}

std::vector<double> LatentSpace::parameters() const {
    std::vector<double> flat;
    flat.reserve(embedder_.param_count() + decoder_.param_count());
    flat.insert(flat.end(), embedder_.params().begin(), embedder_.params().end());
    flat.insert(flat.end(), decoder_.params().begin(), decoder_.params().end());
    return flat;
}

void LatentSpace::set_parameters(const std::vector<double>& flat) {
    if (flat.size() != embedder_.param_count() + decoder_.param_count()) {
        throw std::invalid_argument("LatentSpace::set_parameters: size mismatch");
    }
    std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(embedder_.param_count()),
              embedder_.params().begin());
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(embedder_.param_count()), flat.end(),
              decoder_.params().begin());
}

void LatentSpace::save(std::ostream& out) const {
    nlohmann::json j;
    j["state_dim"] = embedder_.in_dim();
    j["hidden"] = embedder_.hidden_dim();
    j["embed_dim"] = embedder_.out_dim();
    j["seed"] = seed_;
    j["learning_rate"] = learning_rate_;
    j["momentum"] = momentum_;
    j["linear_dt_norm"] = use_linear_dt_norm;
    j["params"] = parameters();
    out << j.dump();
}

LatentSpace LatentSpace::load(std::istream& in) {
    nlohmann::json j;
    in >> j;
    LatentSpace ls(j.at("state_dim").get<int>(), j.at("hidden").get<int>(),
                   j.at("embed_dim").get<int>(), 0.0, j.at("learning_rate").get<double>(),
                   j.at("momentum").get<double>(), j.at("seed").get<std::uint64_t>());
    ls.use_linear_dt_norm = j.at("linear_dt_norm").get<bool>();
    ls.set_parameters(j.at("params").get<std::vector<double>>());
    return ls;
}

}  // namespace ce2
