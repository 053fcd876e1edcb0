#include <cmath>
#include <vector>

#include "doctest.h"

#include "imfphd/imf.hpp"
#include "imfphd/rng.hpp"

using namespace imfphd;

namespace {

NoiseMixtureModel two_model_noise() {
    return NoiseMixtureModel({{0.7, Vector::Zero(2), 0.01 * Matrix::Identity(2, 2)},
                              {0.3, Vector::Zero(2), 100.0 * Matrix::Identity(2, 2)}});
}

MotionModel cv4_motion() {
    Matrix F = Matrix::Identity(4, 4);
    F(0, 1) = 1.0;
    F(2, 3) = 1.0;
    Matrix Q = Vector{{0.01, 0.1, 0.01, 0.1}}.asDiagonal();
    return MotionModel(F, Q);
}

MeasurementModel position_meas() {
    Matrix H = Matrix::Zero(2, 4);
    H(0, 0) = 1.0;
    H(1, 2) = 1.0;
    return MeasurementModel(H);
}

bool same_mixture(const GaussianMixture& a, const GaussianMixture& b) {
    if (a.size() != b.size() || a.dim != b.dim) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.components[i].weight != b.components[i].weight) return false;
        if (a.components[i].mean != b.components[i].mean) return false;
        if (a.components[i].cov != b.components[i].cov) return false;
    }
    return true;
}

GaussianMixture random_mixture4(int n, Rng& rng) {
    GaussianMixture mix(4);
    for (int i = 0; i < n; ++i) {
        Vector m{{rng.uniform(0.0, 200.0), rng.normal(), rng.uniform(0.0, 200.0), rng.normal()}};
        Matrix A(4, 4);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) A(r, c) = rng.normal();
        mix.add(GaussianComponent(rng.uniform(0.05, 1.5), m,
                                  A * A.transpose() + Matrix::Identity(4, 4)));
    }
    return mix;
}

}  // namespace

TEST_CASE("bank initialization replicates the prior across models") {
    Rng rng(3);
    const auto prior = random_mixture4(5, rng);
    const auto noise = two_model_noise();
    const auto bank = init_bank(prior, noise);
    CHECK(bank.L == 2);
    CHECK(bank.dim == 4);
    REQUIRE(bank.comps.size() == prior.size());
    for (std::size_t i = 0; i < bank.comps.size(); ++i) {
        const auto& bc = bank.comps[i];
        CHECK(bc.modelProbs[0] == 0.7);
        CHECK(bc.modelProbs[1] == 0.3);
        REQUIRE(bc.states.size() == 2);
        for (const auto& s : bc.states) {
            CHECK(s.weight == prior.components[i].weight);
            CHECK(s.mean == prior.components[i].mean);
            CHECK(s.cov == prior.components[i].cov);
        }
    }
}

TEST_CASE("single-model mixing is the identity") {
    Rng rng(5);
    const auto prior = random_mixture4(4, rng);
    const NoiseMixtureModel noise({{1.0, Vector::Zero(2), Matrix::Identity(2, 2)}});
    const auto bank = init_bank(prior, noise);
    const auto mixed = mix_inputs(bank, build_transition_matrix(noise));
    REQUIRE(mixed.comps.size() == bank.comps.size());
    for (std::size_t i = 0; i < mixed.comps.size(); ++i) {
        CHECK(mixed.comps[i].cbar[0] == 1.0);
        CHECK(mixed.comps[i].mixWeights(0, 0) == 1.0);
        const auto& in = mixed.comps[i].inputs[0];
        CHECK(in.weight == prior.components[i].weight);
        CHECK(in.mean == prior.components[i].mean);
        CHECK(in.cov == prior.components[i].cov);
    }
}

TEST_CASE("two-model mixing against hand algebra") {
    // Equal model probabilities and identical transition rows make every
    // mixing weight 0.5, so each model receives the same averaged moments.
    ModelConditionedBank bank;
    bank.L = 2;
    bank.dim = 1;
    BankComponent bc;
    bc.modelProbs = Vector{{0.5, 0.5}};
    bc.states.push_back(GaussianComponent(0.6, Vector{{0.0}}, Matrix::Identity(1, 1)));
    bc.states.push_back(GaussianComponent(0.6, Vector{{2.0}}, Matrix::Identity(1, 1)));
    bank.comps.push_back(bc);

    const TransitionMatrix trans(Matrix{{0.7, 0.3}, {0.7, 0.3}});
    const auto mixed = mix_inputs(bank, trans);
    REQUIRE(mixed.comps.size() == 1);
    const auto& mc = mixed.comps[0];
    CHECK(mc.cbar[0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(mc.cbar[1] == doctest::Approx(0.3).epsilon(1e-15));
    for (int u = 0; u < 2; ++u) {
        CHECK(mc.mixWeights(0, u) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(mc.mixWeights(1, u) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(mc.inputs[u].weight == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(mc.inputs[u].mean[0] == doctest::Approx(1.0).epsilon(1e-15));
        // spread: 0.5*(1 + 1) + 0.5*(1 + 1)
        CHECK(mc.inputs[u].cov(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    }
}

TEST_CASE("mixing weight columns are normalized") {
    Rng rng(7);
    const auto noise = two_model_noise();
    for (int trial = 0; trial < 20; ++trial) {
        auto bank = init_bank(random_mixture4(3, rng), noise);
        for (auto& bc : bank.comps) {
            const double a = rng.uniform(0.01, 0.99);
            bc.modelProbs = Vector{{a, 1.0 - a}};
        }
        const double t = rng.uniform(0.05, 0.95);
        const TransitionMatrix trans(Matrix{{t, 1.0 - t}, {1.0 - t, t}});
        const auto mixed = mix_inputs(bank, trans);
        for (const auto& mc : mixed.comps) {
            CHECK(std::abs(mc.cbar.sum() - 1.0) < 1e-12);
            for (int u = 0; u < 2; ++u) {
                CHECK(std::abs(mc.mixWeights.col(u).sum() - 1.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("per-model step with one model equals the plain update") {
    Rng rng(11);
    const auto prior = random_mixture4(6, rng);
    const NoiseMixtureModel noise({{1.0, Vector::Zero(2), 4.0 * Matrix::Identity(2, 2)}});
    const auto motion = cv4_motion();
    const auto meas = position_meas();
    const ClutterModel clutter(5.0, Box{Vector::Zero(2), Vector::Constant(2, 200.0)});
    std::vector<Vector> zs;
    for (int k = 0; k < 6; ++k) {
        zs.push_back(Vector{{rng.uniform(0.0, 200.0), rng.uniform(0.0, 200.0)}});
    }
    BirthModel birth;
    birth.intensity = random_mixture4(2, rng);
    const FilterParams params;

    const auto mixed = mix_inputs(init_bank(prior, noise), build_transition_matrix(noise));
    const auto pm = per_model_step(mixed, 0, noise, motion, {}, birth, meas, zs, clutter, params);

    const GaussianMixture predicted = phd_predict(prior, motion, {}, birth, params);
    const auto direct = phd_update_full(predicted, meas, noise.components[0].R,
                                        noise.components[0].mu, zs, clutter, params);
    CHECK(same_mixture(GaussianMixture(4, pm.posterior), direct.posterior));
}

TEST_CASE("model likelihood plugs the innovation into its own density") {
    PerModelStepResult pm;
    pm.posterior.push_back(GaussianComponent(1.0, Vector{{0.0}}, Matrix::Identity(1, 1)));
    pm.innovations.push_back({true, Vector{{1.0}}, 2.0 * Matrix::Identity(1, 1)});
    Matrix cbars(1, 1);
    cbars(0, 0) = 0.5;
    const Matrix lambda = model_likelihoods({pm}, cbars);
    const double expected = 0.5 * std::exp(-0.25) / std::sqrt(4.0 * M_PI);
    CHECK(lambda(0, 0) == doctest::Approx(expected).epsilon(1e-14));

    PerModelStepResult missed;
    missed.posterior.push_back(pm.posterior[0]);
    missed.innovations.push_back({false, {}, {}});
    CHECK(model_likelihoods({missed}, cbars)(0, 0) == 0.5);
}

TEST_CASE("model probability update") {
    SUBCASE("equal likelihoods give uniform probabilities") {
        Matrix lambda(1, 2), cbars(1, 2);
        lambda << 0.2, 0.2;
        cbars << 0.7, 0.3;
        const auto probs = update_model_probs(lambda, cbars);
        CHECK(probs[0][0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(probs[0][1] == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("likelihood ratio sets the posterior split") {
        Matrix lambda(1, 2), cbars(1, 2);
        lambda << 0.3, 0.1;
        cbars << 0.5, 0.5;
        const auto probs = update_model_probs(lambda, cbars);
        CHECK(probs[0][0] == doctest::Approx(0.75).epsilon(1e-14));
        CHECK(probs[0][1] == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("vanishing likelihoods fall back to predicted probabilities") {
        Matrix lambda(1, 2), cbars(1, 2);
        lambda << 0.0, 0.0;
        cbars << 0.2, 0.6;
        const auto probs = update_model_probs(lambda, cbars);
        CHECK(probs[0][0] == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(probs[0][1] == doctest::Approx(0.75).epsilon(1e-14));
    }
}

TEST_CASE("moment fusion") {
    PerModelStepResult m0, m1;
    m0.posterior.push_back(GaussianComponent(0.4, Vector{{1.0}}, 2.0 * Matrix::Identity(1, 1)));
    m1.posterior.push_back(GaussianComponent(0.9, Vector{{5.0}}, 3.0 * Matrix::Identity(1, 1)));

    SUBCASE("one-hot probabilities select a single model") {
        const auto fused = fuse({m0, m1}, {Vector{{1.0, 0.0}}}, 1);
        REQUIRE(fused.size() == 1);
        CHECK(fused.components[0].weight == 0.4);
        CHECK(fused.components[0].mean[0] == 1.0);
        CHECK(fused.components[0].cov(0, 0) == 2.0);
    }
    SUBCASE("identical models fuse to themselves") {
        const auto fused = fuse({m0, m0}, {Vector{{0.3, 0.7}}}, 1);
        REQUIRE(fused.size() == 1);
        CHECK(fused.components[0].weight == doctest::Approx(0.4).epsilon(1e-15));
        CHECK(fused.components[0].mean[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(fused.components[0].cov(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("split probabilities add the mean spread") {
        PerModelStepResult a, b;
        a.posterior.push_back(GaussianComponent(0.5, Vector{{0.0}}, Matrix::Identity(1, 1)));
        b.posterior.push_back(GaussianComponent(0.5, Vector{{2.0}}, Matrix::Identity(1, 1)));
        const auto fused = fuse({a, b}, {Vector{{0.5, 0.5}}}, 1);
        CHECK(fused.components[0].mean[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(fused.components[0].cov(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    }
}

TEST_CASE("one-model filter reproduces the plain filter step for step") {
    Rng rng(13);
    const NoiseMixtureModel noise({{1.0, Vector::Zero(2), 2.5 * Matrix::Identity(2, 2)}});
    const auto trans = build_transition_matrix(noise);
    const auto motion = cv4_motion();
    const auto meas = position_meas();
    const ClutterModel clutter(5.0, Box{Vector::Zero(2), Vector::Constant(2, 200.0)});
    BirthModel birth;
    birth.intensity = GaussianMixture(4);
    birth.intensity.add(GaussianComponent(
        0.1, Vector{{100.0, 0.0, 100.0, 0.0}},
        Vector{{100.0, 25.0, 100.0, 25.0}}.asDiagonal()));
    FilterParams params;
    params.maxComponents = 40;

    GaussianMixture gmPrior(4);
    ModelConditionedBank bank = init_bank(gmPrior, noise);
    for (int step = 0; step < 20; ++step) {
        std::vector<Vector> zs;
        const int n = 2 + static_cast<int>(rng.uniform_index(6));
        for (int k = 0; k < n; ++k) {
            zs.push_back(Vector{{rng.uniform(0.0, 200.0), rng.uniform(0.0, 200.0)}});
        }
        const auto gm = gmphd_step(gmPrior, motion, {}, birth, meas, noise.components[0].R,
                                   noise.components[0].mu, zs, clutter, params);
        const auto imf =
            imf_gmphd_step(bank, trans, noise, motion, {}, birth, meas, zs, clutter, params);

        CHECK(same_mixture(imf.fused, gm.posterior));
        REQUIRE(imf.estimates.size() == gm.estimates.size());
        for (std::size_t i = 0; i < imf.estimates.size(); ++i) {
            CHECK(imf.estimates[i].mean == gm.estimates[i].mean);
        }
        gmPrior = gm.posterior;
        bank = imf.bank;
    }
}

TEST_CASE("model probabilities move toward the model matching the data") {
    // A stationary target observed with zero noise: the tight model explains
    // every innovation far better than the wide one.
    const auto noise = two_model_noise();
    const auto trans = build_transition_matrix(noise);
    const auto motion = cv4_motion();
    const auto meas = position_meas();
    FilterParams params;
    params.pDetect = 0.98;

    GaussianMixture prior(4);
    prior.add(GaussianComponent(1.0, Vector{{50.0, 0.0, 50.0, 0.0}},
                                Vector{{1.0, 0.1, 1.0, 0.1}}.asDiagonal()));
    ModelConditionedBank bank = init_bank(prior, noise);
    const std::vector<Vector> zs{Vector{{50.0, 50.0}}};

    for (int step = 0; step < 4; ++step) {
        const auto out = imf_gmphd_step(bank, trans, noise, motion, {}, BirthModel{},
                                        meas, zs, ClutterModel{}, params);
        bank = out.bank;
        for (const auto& bc : bank.comps) {
            REQUIRE(bc.modelProbs.size() == 2);
            REQUIRE(bc.states.size() == 2);
            CHECK(std::abs(bc.modelProbs.sum() - 1.0) < 1e-12);
            CHECK(bc.modelProbs.minCoeff() >= 0.0);
        }
    }
    REQUIRE(!bank.comps.empty());
    CHECK(bank.comps[0].modelProbs[0] > 0.9);
}
