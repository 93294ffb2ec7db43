import numpy as np
import pytest

from paretoplan.belief import (
    BeliefError,
    CostBelief,
    NiwParams,
    VecMoments,
    convolved_moments,
    mvn_entropy,
    normality_diagnostic,
    param_moments,
    posterior_update,
    sample_vec_params,
    summed_vec_param_cov,
    vec_dim,
    vec_param_cov,
)


def prior2(lam=(0.0, 0.0), kappa=1.0, scale=1.0, nu=6.0):
    return NiwParams(lam=np.array(lam), kappa=kappa, Lam=np.eye(2) * scale, nu=nu)


class TestPosteriorUpdate:
    def test_empty_data_identity(self):
        p = prior2()
        q = posterior_update(p, np.empty((0, 2)))
        assert q is p

    def test_single_sample_at_center(self):
        p = prior2(lam=(1.0, 2.0))
        q = posterior_update(p, [[1.0, 2.0]])
        assert np.allclose(q.lam, p.lam)
        assert q.kappa == 2.0
        assert np.allclose(q.Lam, p.Lam)
        assert q.nu == p.nu + 1

    def test_batch_equals_sequential(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = prior2(lam=rng.normal(size=2), kappa=float(rng.uniform(0.5, 3)),
                       scale=float(rng.uniform(0.5, 2)), nu=float(rng.uniform(6, 9)))
            data = rng.normal(size=(int(rng.integers(1, 51)), 2)) * 2 + 1
            batch = posterior_update(p, data)
            seq = p
            for row in data:
                seq = posterior_update(seq, [row])
            for got, want in [(seq.lam, batch.lam), (seq.Lam, batch.Lam),
                              (seq.kappa, batch.kappa), (seq.nu, batch.nu)]:
                assert np.allclose(got, want, rtol=1e-9, atol=1e-9)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        p = prior2()
        data = rng.normal(size=(30, 2))
        a = posterior_update(p, data)
        b = posterior_update(p, data[rng.permutation(30)])
        assert np.allclose(a.lam, b.lam, rtol=1e-9)
        assert np.allclose(a.Lam, b.Lam, rtol=1e-9)

    def test_posterior_concentration(self):
        rng = np.random.default_rng(11)
        mu_true = np.array([3.0, -1.0])
        cov_true = np.array([[2.0, 0.6], [0.6, 1.0]])
        data = rng.multivariate_normal(mu_true, cov_true, size=10_000)
        q = posterior_update(prior2(), data)
        m = param_moments(q)
        assert np.allclose(m.mean[:2], data.mean(axis=0), rtol=0.01, atol=0.01)
        e_sigma = q.Lam / (q.nu - 2 - 1)
        assert np.allclose(e_sigma, np.cov(data.T), rtol=0.01, atol=0.01)

    def test_dimension_mismatch(self):
        with pytest.raises(BeliefError, match="dim"):
            posterior_update(prior2(), [[1.0, 2.0, 3.0]])


class TestParamMoments:
    def test_scalar_closed_form(self):
        p = NiwParams(lam=np.array([2.0]), kappa=4.0, Lam=np.array([[6.0]]), nu=5.0)
        m = param_moments(p)
        assert m.dim == vec_dim(1) == 2
        assert m.mean[0] == 2.0
        assert np.isclose(m.mean[1], 6.0 / (5.0 - 1.0 - 1.0))
        assert np.isclose(m.cov[0, 0], 6.0 / (4.0 * 3.0))

    def test_diagonal_scale_gives_diagonal_mean(self):
        p = prior2(scale=2.0, nu=8.0)
        m = param_moments(p)
        # vec = (mu1, mu2, S11, S12, S22); off-diagonal scale expectation is 0
        assert np.isclose(m.mean[3], 0.0)
        assert np.isclose(m.mean[2], m.mean[4])

    def test_matches_monte_carlo(self):
        rng = np.random.default_rng(21)
        A = rng.normal(size=(2, 2))
        p = NiwParams(lam=np.array([1.0, -2.0]), kappa=2.5,
                      Lam=A @ A.T + 2 * np.eye(2), nu=9.0)
        draws = sample_vec_params(p, 400_000, rng)
        emp_mean = draws.mean(axis=0)
        emp_cov = np.cov(draws.T)
        m = param_moments(p)
        se_mean = draws.std(axis=0) / np.sqrt(len(draws))
        assert np.all(np.abs(emp_mean - m.mean) < 4 * se_mean)
        # covariance entries: compare with a generous relative band
        scale = np.sqrt(np.outer(np.diag(m.cov), np.diag(m.cov)))
        assert np.all(np.abs(emp_cov - m.cov) < 0.05 * scale + 1e-3)

    def test_variance_shrinks_with_nu(self):
        prev = None
        for nu in [8.0, 16.0, 32.0, 64.0]:
            p = prior2(scale=nu, nu=nu)  # keeps Lam/nu fixed
            v = np.diag(param_moments(p).cov)
            if prev is not None:
                assert np.all(v < prev)
            prev = v

    def test_nu_too_small(self):
        with pytest.raises(BeliefError, match="nu"):
            param_moments(prior2(nu=4.5))

    def test_improper_kappa_rejected(self):
        p = NiwParams(lam=np.zeros(2), kappa=0.0, Lam=np.eye(2), nu=8.0)
        with pytest.raises(BeliefError, match="improper"):
            param_moments(p)

    def test_summed_cov_matches_per_edge_route(self):
        rng = np.random.default_rng(14)
        for n in (1, 2, 3):
            E, S = 6, 3
            A = rng.normal(size=(E, S, n, n))
            Lam = A @ np.swapaxes(A, -1, -2) + 2 * np.eye(n)
            kap = rng.uniform(1, 5, size=E)
            nu = rng.uniform(n + 4, n + 9, size=E)
            split = vec_param_cov(Lam, kap[:, None], nu[:, None]).sum(axis=0)
            fused = summed_vec_param_cov(Lam, kap, nu)
            assert np.allclose(split, fused, rtol=1e-12, atol=1e-12)


class TestConvolvedMoments:
    def belief(self):
        params = {
            (0, "a"): prior2(lam=(1.0, 2.0), nu=8.0),
            (1, "b"): prior2(lam=(3.0, 1.0), kappa=2.0, scale=2.0, nu=9.0),
        }
        return CostBelief(params)

    def test_single_edge(self):
        b = self.belief()
        m1 = convolved_moments(b, [(0, "a")])
        m2 = param_moments(b.get(0, "a"))
        assert np.allclose(m1.mean, m2.mean)
        assert np.allclose(m1.cov, m2.cov)

    def test_two_identical_edges(self):
        b = self.belief()
        m1 = param_moments(b.get(0, "a"))
        m2 = convolved_moments(b, [(0, "a"), (0, "a")])
        assert np.allclose(m2.mean, 2 * m1.mean)
        assert np.allclose(m2.cov, 2 * m1.cov)

    def test_matches_sampled_sum(self):
        rng = np.random.default_rng(3)
        b = self.belief()
        edges = [(0, "a"), (1, "b")] * 5
        m = convolved_moments(b, edges)
        total = None
        for s, a in edges:
            d = sample_vec_params(b.get(s, a), 60_000, rng)
            total = d if total is None else total + d
        se_mean = total.std(axis=0) / np.sqrt(len(total))
        assert np.all(np.abs(total.mean(axis=0) - m.mean) < 4 * se_mean)
        emp_var = total.var(axis=0)
        m4 = ((total - total.mean(axis=0)) ** 4).mean(axis=0)
        se_var = np.sqrt(np.clip(m4 - emp_var**2, 0, None) / len(total))
        assert np.all(np.abs(emp_var - np.diag(m.cov)) < 4 * se_var)

    def test_missing_edge(self):
        with pytest.raises(BeliefError, match="no belief"):
            convolved_moments(self.belief(), [(9, "zz")])


class TestEntropy:
    def test_identity(self):
        m = VecMoments(mean=np.zeros(5), cov=np.eye(5))
        assert np.isclose(mvn_entropy(m), 2.5 * (1 + np.log(2 * np.pi)))

    def test_scaling_law(self):
        base = mvn_entropy(VecMoments(np.zeros(5), np.eye(5)))
        scaled = mvn_entropy(VecMoments(np.zeros(5), 4 * np.eye(5)))
        assert np.isclose(scaled, base + 2.5 * np.log(4.0))

    def test_eigenvalue_oracle(self):
        rng = np.random.default_rng(8)
        A = rng.normal(size=(6, 6))
        cov = A @ A.T + 0.5 * np.eye(6)
        want = 0.5 * np.sum(np.log(np.linalg.eigvalsh(cov))) + 3.0 * (1 + np.log(2 * np.pi))
        assert np.isclose(mvn_entropy(VecMoments(np.zeros(6), cov)), want)

    def test_singular_rejected(self):
        with pytest.raises(BeliefError, match="positive definite"):
            mvn_entropy(VecMoments(np.zeros(2), np.zeros((2, 2))))


class TestCostBelief:
    def test_counts_and_global_step(self):
        b = CostBelief({(0, "a"): prior2(), (1, "b"): prior2()})
        b.update(0, "a", [[1.0, 0.0], [2.0, 1.0]])
        b.update(1, "b", [[0.5, 0.5]])
        assert b.count(0, "a") == 2
        assert b.count(1, "b") == 1
        assert b.k_g == 3

    def test_json_roundtrip(self):
        b = CostBelief({(0, "a"): prior2()})
        b.update(0, "a", [[1.0, 2.0]])
        b2 = CostBelief.from_json(b.to_json())
        assert b2.k_g == b.k_g
        assert b2.count(0, "a") == 1
        assert np.allclose(b2.get(0, "a").lam, b.get(0, "a").lam)
        assert np.allclose(b2.get(0, "a").Lam, b.get(0, "a").Lam)


class TestNormalityDiagnostic:
    def _belief_with_data(self, n_edges, n_obs, seed):
        rng = np.random.default_rng(seed)
        params = {}
        belief = CostBelief({(i, "go"): prior2(nu=8.0) for i in range(n_edges)})
        for i in range(n_edges):
            data = rng.multivariate_normal([2.0, 1.0], np.eye(2) * 0.5, size=n_obs)
            belief.update(i, "go", data)
        return belief

    def test_whitening(self):
        belief = self._belief_with_data(5, 10, seed=2)
        report = normality_diagnostic(
            belief, [(i, "go") for i in range(5)], n_samples=4000,
            rng=np.random.default_rng(5))
        assert np.all(np.abs(report.whitened_mean) < 1e-8)
        assert np.allclose(report.whitened_cov, np.eye(report.sample.shape[0]),
                           atol=1e-6)

    def test_longer_plans_are_more_normal(self):
        devs = {}
        for length in (10, 40):
            belief = self._belief_with_data(length, 10, seed=7)
            report = normality_diagnostic(
                belief, [(i, "go") for i in range(length)], n_samples=5000,
                rng=np.random.default_rng(31))
            devs[length] = report.max_abs_dev.max()
        assert devs[40] < devs[10]

    def test_more_data_is_more_normal(self):
        devs = {}
        for n_obs in (10, 100):
            belief = self._belief_with_data(20, n_obs, seed=9)
            report = normality_diagnostic(
                belief, [(i, "go") for i in range(20)], n_samples=5000,
                rng=np.random.default_rng(13))
            devs[n_obs] = report.max_abs_dev.max()
        assert devs[100] < devs[10]
