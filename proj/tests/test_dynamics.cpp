#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "wsf/dynamics.hpp"

using namespace wsf;
using wsf::testing::reference_lattice;

namespace {

const double eps_ref = from_ghz(wsf::testing::reference_amplitude_ghz);

RateTable table(std::initializer_list<double> gammas) {
    RateTable t;
    t.gamma_up = Eigen::VectorXd(Eigen::Index(gammas.size()));
    int i = 0;
    for (double g : gammas) {
        t.targets.push_back(i + 1);
        t.gamma_up(i++) = g;
    }
    return t;
}

Dissipation reference_dissipation(int n) {
    const SystemParams p = reference_lattice(n);
    return Dissipation{p.gamma, p.gamma_phi, n};
}

Eigen::MatrixXcd random_matrix(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXcd m(d, d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) m(r, c) = cplx(normal(rng), normal(rng));
    }
    return m;
}

Eigen::MatrixXcd act(const Eigen::MatrixXcd& L, const Eigen::MatrixXcd& rho) {
    const auto d = rho.rows();
    const Eigen::VectorXcd v = L * Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), d, d);
}

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> s(a - b, Eigen::EigenvaluesOnly);
    return 0.5 * s.eigenvalues().cwiseAbs().sum();
}

// Rates and eigensystem at the optimum for target k, as used for the Lindblad checks.
struct Setup {
    EigenSystem es;
    RateTable rates;
    Dissipation diss;
};

Setup driven_setup(int n, int k, int manifolds) {
    const SystemParams p = reference_lattice(n);
    const DriveProfile d0 = DriveProfile::uniform(n, eps_ref, 0.0);
    const double wd = manifolds == 0 ? optimal_drive_frequency(p, d0, k, k)
                                     : optimal_drive_frequency_exact(p, d0, k, k, manifolds);
    const DriveProfile d = d0.with_frequency(wd);
    const ModeSet modes = build_mode_set(p);
    const EffectiveSpinModel model = build_effective_model(p, d);
    Setup s;
    s.es = manifolds == 0 ? effective_eigensystem(model, modes) : exact_diagonalization(model, modes, {manifolds, 20000});
    s.rates = pump_rates(transition_matrix_elements(modes, d, p, s.es), {modes.frequencies, p.kappa}, s.es, wd);
    s.diss = Dissipation{p.gamma, p.gamma_phi, n};
    return s;
}

} // namespace

TEST_CASE("closed-form steady state") {
    const Dissipation diss = reference_dissipation(5);

    const PopulationState idle = ness_closed_form(table({0, 0, 0, 0, 0}), diss);
    CHECK(idle.n0 == 1.0);
    CHECK(idle.nk.cwiseAbs().maxCoeff() == 0.0);

    const Dissipation clean{2.0, 0.0, 3};
    const PopulationState one = ness_closed_form(table({0, 3.0, 0}), clean);
    CHECK(one.nk(1) == doctest::Approx(3.0 / 5.0).epsilon(1e-15));
    CHECK(one.nk(0) == 0.0);
    CHECK(one.n0 == doctest::Approx(0.4).epsilon(1e-15));

    CHECK(fidelity_ceiling(diss) == doctest::Approx(0.8667).epsilon(1e-4 / 0.8667));
    const PopulationState saturated = ness_closed_form(table({1e6, 0, 0, 0, 0}), diss);
    CHECK(saturated.nk(0) < fidelity_ceiling(diss));
    CHECK(saturated.nk(0) == doctest::Approx(fidelity_ceiling(diss)).epsilon(1e-9));

    CHECK_THROWS_AS(ness_closed_form(table({1, 1}), Dissipation{0.0, 1.0, 2}), Error);
    CHECK_THROWS_AS(ness_closed_form(table({1, 1}), diss), Error);
}

TEST_CASE("rate equations") {
    const Dissipation diss = reference_dissipation(4);
    const RateTable rates = table({3e-5, 1e-6, 0.0, 2e-4});
    const double scale = rates.gamma_up.maxCoeff();

    const PopulationState ness = ness_closed_form(rates, diss);
    const PopulationState still = rate_equation_rhs(ness, rates, diss);
    CHECK(std::abs(still.n0) < 1e-12 * scale);
    CHECK(still.nk.cwiseAbs().maxCoeff() < 1e-12 * scale);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        PopulationState s{u(rng), Eigen::VectorXd::NullaryExpr(4, [&] { return u(rng); })};
        CHECK(std::abs(rate_equation_rhs(s, rates, diss).total()) < 1e-15 * scale * 10);
    }

    const PopulationState start{1.0, Eigen::VectorXd::Zero(4)};
    const PopulationState d = rate_equation_rhs(start, rates, diss);
    CHECK((d.nk - rates.gamma_up).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(rate_equation_rhs(PopulationState{1.0, Eigen::VectorXd::Zero(3)}, rates, diss), Error);
}

TEST_CASE("rate-equation integration") {
    const Dissipation diss = reference_dissipation(3);

    SUBCASE("pure decay") {
        const PopulationState init{0.0, Eigen::Vector3d(0.5, 0.3, 0.2)};
        const Trajectory tr = integrate_rate_equations(init, table({0, 0, 0}), diss, 3.0 / diss.gamma);
        CHECK(tr.final_state.n0 == doctest::Approx(1.0 - std::exp(-3.0)).epsilon(1e-8));
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            CHECK(tr.states[i].n0 == doctest::Approx(1.0 - std::exp(-diss.gamma * tr.times[i])).epsilon(1e-7));
        }
    }

    SUBCASE("relaxes to the closed-form steady state and conserves population") {
        const RateTable rates = table({4e-4, 2e-5, 1e-6});
        const PopulationState init{1.0, Eigen::Vector3d::Zero()};
        const Trajectory tr = integrate_rate_equations(init, rates, diss, 20.0 / diss.gamma);
        const PopulationState ness = ness_closed_form(rates, diss);
        CHECK(std::abs(tr.final_state.n0 - ness.n0) < 1e-8);
        CHECK((tr.final_state.nk - ness.nk).cwiseAbs().maxCoeff() < 1e-8);
        for (const auto& s : tr.states) CHECK(std::abs(s.total() - 1.0) < 1e-10);
        CHECK(tr.steps > 0);
        CHECK(tr.times.back() == doctest::Approx(20.0 / diss.gamma));
    }

    SUBCASE("unreachable tolerances report a step-size underflow") {
        IntegrationControl control;
        control.rtol = 1e-17;
        control.atol = 1e-40;
        control.min_step = 1e-3;
        CHECK_THROWS_AS(integrate_rate_equations({1.0, Eigen::Vector3d::Zero()}, table({1.0, 2.0, 3.0}), diss, 10.0,
                                                 control),
                        SolverError);
    }
}

TEST_CASE("dissipator superoperator") {
    std::mt19937_64 rng(11);
    const int d = 4;
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXcd X = random_matrix(d, rng);
        Eigen::MatrixXcd rho = random_matrix(d, rng);
        rho = rho * rho.adjoint();
        Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(d * d, d * d);
        add_dissipator(L, X, 0.7);
        const Eigen::MatrixXcd K = X.adjoint() * X;
        const Eigen::MatrixXcd expected = 0.7 * (X * rho * X.adjoint() - 0.5 * (K * rho + rho * K));
        CHECK((act(L, rho) - expected).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(act(L, rho).trace()) < 1e-12);
    }
}

TEST_CASE("Lindblad generator") {
    SUBCASE("trace preservation") {
        const Setup s = driven_setup(3, 1, 3);
        const Eigen::MatrixXcd L = build_liouvillian(s.es, s.rates, {s.diss, from_ghz(1e-2)});
        const int d = s.es.size();
        for (Eigen::Index col = 0; col < L.cols(); ++col) {
            cplx sum = 0.0;
            for (int a = 0; a < d; ++a) sum += L(a + a * d, col);
            CHECK(std::abs(sum) < 1e-12);
        }
    }

    SUBCASE("without dissipation only the commutator remains") {
        Setup s = driven_setup(3, 0, 2);
        s.rates.gamma_up.setZero();
        const Eigen::MatrixXcd L = build_liouvillian(s.es, s.rates, {Dissipation{0.0, 0.0, 3}, 0.0});
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(L, false);
        CHECK(eig.eigenvalues().real().cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("generic dissipators reproduce the transition fast path") {
        Setup s = driven_setup(3, 2, 0);
        const int d = s.es.size();
        const Eigen::MatrixXcd L = build_liouvillian(s.es, s.rates, {s.diss, 0.0});
        Eigen::MatrixXcd manual = Eigen::MatrixXcd::Zero(d * d, d * d);
        for (int a = 0; a < d; ++a) {
            for (int c = 0; c < d; ++c) manual(a + c * d, a + c * d) = cplx(0.0, -(s.es.energies(a) - s.es.energies(c)));
        }
        auto jump = [d](int to, int from) {
            Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(d, d);
            X(to, from) = 1.0;
            return X;
        };
        const int g0 = s.es.ground_index();
        for (std::size_t t = 0; t < s.rates.targets.size(); ++t) {
            add_dissipator(manual, jump(s.rates.targets[t], g0), s.rates.gamma_up(Eigen::Index(t)));
        }
        for (int k : s.es.manifold(1)) {
            add_dissipator(manual, jump(g0, k), s.diss.gamma);
            for (int q : s.es.manifold(1)) add_dissipator(manual, jump(q, k), 2 * s.diss.gamma_phi / 3);
        }
        CHECK((L - manual).cwiseAbs().maxCoeff() < 1e-18);
    }

    SUBCASE("dimension cap") {
        const Setup s = driven_setup(4, 0, 4);
        LindbladOptions opts{s.diss, 0.0, 8};
        CHECK_THROWS_AS(build_liouvillian(s.es, s.rates, opts), SolverError);
    }
}

TEST_CASE("steady states of the Lindblad generator") {
    SUBCASE("two sites, single-excitation truncation: populations follow the closed form") {
        const Setup s = driven_setup(2, 0, 0);
        const NessSolution sol = solve_ness(build_liouvillian(s.es, s.rates, {s.diss, 0.0}));
        const PopulationState pop = ness_closed_form(s.rates, s.diss);
        CHECK(std::abs(sol.rho.entries(s.es.ground_index(), s.es.ground_index()).real() - pop.n0) < 1e-6);
        for (std::size_t t = 0; t < s.rates.targets.size(); ++t) {
            const int k = s.rates.targets[t];
            CHECK(std::abs(sol.rho.entries(k, k).real() - pop.nk(Eigen::Index(t))) < 1e-6);
        }
        CHECK(sol.solver == SolverKind::LindbladNullSpace);
    }

    SUBCASE("pure decay relaxes to the ground state") {
        Setup s = driven_setup(3, 0, 2);
        s.rates.gamma_up.setZero();
        const NessSolution sol = solve_ness(build_liouvillian(s.es, s.rates, {s.diss, from_ghz(1e-2)}));
        const int g = s.es.ground_index();
        CHECK(sol.rho.entries(g, g).real() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(sol.rho.entries.trace() - 1.0) < 1e-12);
    }

    SUBCASE("five sites at the optimum: the targeted state dominates, bounded by n_max") {
        for (int k = 0; k < 5; ++k) {
            const Setup s = driven_setup(5, k, 1);
            const NessSolution sol = solve_ness(build_liouvillian(s.es, s.rates, {s.diss, from_ghz(1e-2)}));
            const DensityDiagnostics diag = diagnose(sol.rho);
            CHECK(diag.hermiticity < 1e-12);
            CHECK(diag.trace_error < 1e-10);
            CHECK(diag.min_eigenvalue > -1e-10);
            const int target = s.es.slot_index(k);
            for (int q : s.es.manifold(1)) {
                if (q != target) CHECK(sol.rho.entries(q, q).real() < sol.rho.entries(target, target).real());
            }
            CHECK(sol.rho.entries(target, target).real() <= fidelity_ceiling(s.diss));
            CHECK(sol.rho.entries(target, target).real() > 0.8);
            CHECK(sol.residual < 1e-12);
        }
    }

    SUBCASE("null-space and propagation agree") {
        for (int n = 2; n <= 4; ++n) {
            const Setup s = driven_setup(n, n - 1, 2);
            const Eigen::MatrixXcd L = build_liouvillian(s.es, s.rates, {s.diss, from_ghz(1e-2)});
            NessOptions prop;
            prop.method = NessOptions::Method::Propagation;
            const NessSolution a = solve_ness(L);
            const NessSolution b = solve_ness(L, prop);
            CHECK(b.solver == SolverKind::LindbladPropagation);
            CHECK(trace_distance(a.rho.entries, b.rho.entries) < 1e-6);
        }
    }

    SUBCASE("a degenerate kernel is reported with its dimension") {
        Setup s = driven_setup(2, 0, 0);
        s.rates.gamma_up.setZero();
        const Eigen::MatrixXcd L = build_liouvillian(s.es, s.rates, {Dissipation{0.0, 0.0, 2}, 0.0});
        CHECK_THROWS_WITH_AS(solve_ness(L), doctest::Contains("kernel has dimension 3"), SolverError);
        CHECK_THROWS_AS(solve_ness(Eigen::MatrixXcd::Zero(5, 5)), Error);
    }
}

TEST_CASE("fidelity") {
    const int d = 4;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d);
    psi(1) = cplx(0.6, 0.0);
    psi(2) = cplx(0.0, 0.8);
    CHECK(fidelity(DensityMatrix{psi * psi.adjoint()}, psi) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fidelity(DensityMatrix{Eigen::MatrixXcd::Identity(d, d) / d}, psi) == doctest::Approx(0.25));

    Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(d, d);
    diag.diagonal() << 0.1, 0.2, 0.3, 0.4;
    for (int k = 0; k < d; ++k) {
        CHECK(fidelity(DensityMatrix{diag}, Eigen::VectorXcd::Unit(d, k)) == doctest::Approx(0.1 * (k + 1)));
    }
    CHECK_THROWS_AS(fidelity(DensityMatrix{diag}, Eigen::VectorXcd::Zero(3)), Error);

    const DensityDiagnostics bad = diagnose(DensityMatrix{Eigen::Matrix2cd{{0.5, 1.0}, {0.0, 0.6}}});
    CHECK(bad.hermiticity == doctest::Approx(1.0));
    CHECK(bad.trace_error == doctest::Approx(0.1));
    CHECK(diagnose(DensityMatrix{Eigen::Matrix2cd{{0.5, 1.0}, {1.0, 0.5}}}).min_eigenvalue ==
          doctest::Approx(-0.5));
}
