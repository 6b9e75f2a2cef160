import numpy as np
import pytest

from tpqsdp import resources as rs
from tpqsdp.operators import LatticeSpec


class TestCopiesRequired:
    def test_reference_value(self):
        # (8/0.05^2) ln(40 * 184) rounded up
        assert rs.copies_required(0.05, 39, 1.0 / 184.0) == 28493

    def test_small_case(self):
        assert rs.copies_required(1.0, 0, np.exp(-1.0)) == 8

    def test_degenerate_delta(self):
        with pytest.warns(UserWarning):
            assert rs.copies_required(1.0, 0, 1.0) == 0

    def test_range_checks(self):
        with pytest.raises(ValueError):
            rs.copies_required(0.0, 1, 0.1)
        with pytest.raises(ValueError):
            rs.copies_required(0.5, 1, 0.0)


class TestOrLemmaProbabilities:
    def test_clean_limit(self):
        rep = rs.or_lemma_probabilities(0.0, 0.0, 5, 0.0)
        assert rep.P1 == pytest.approx(0.25)
        assert rep.P2 == pytest.approx(0.0)

    def test_paper_constants_gap(self):
        rep = rs.or_lemma_probabilities(1.0 / 184.0, 1.0 / 32.0, 10**6, 0.0)
        assert rep.P1 == pytest.approx(0.25 - 1.0 / 32.0, abs=1e-4)
        assert rep.P2 == pytest.approx(10.0 / 184.0 + 1.0 / 32.0, abs=1e-12)
        assert rep.gap >= 1.0 / 8.0
        assert rep.applicable

    def test_large_purity_term_flagged(self):
        rep = rs.or_lemma_probabilities(1.0 / 184.0, 1.0 / 32.0, 10, 0.05)
        assert rep.gap <= 0 or rep.P2 > rep.P1 - 0.2
        big = rs.or_lemma_probabilities(1.0 / 184.0, 1.0 / 32.0, 10, 0.5)
        assert not big.applicable


class TestOrAcceptanceBinomial:
    def setup_method(self):
        self.ts = rs.ThresholdStructure(epsilon=0.05, xi=0.05,
                                        delta=1.0 / 184.0, m=12)
        self.x = rs.copies_required(0.05, 12, 1.0 / 184.0)
        self.step = self.ts.step_poly()

    def test_p_one_accepts(self):
        acc = rs.or_acceptance_binomial(1.0, self.x, self.ts, step=self.step)
        assert acc >= (1.0 - self.ts.delta_prime) ** 2 - 1e-9

    def test_p_zero_rejects(self):
        acc = rs.or_acceptance_binomial(0.0, self.x, self.ts, step=self.step)
        assert acc <= self.ts.delta_prime**2 + 1e-12

    def test_case_bounds_at_paper_parameters(self):
        dp = self.ts.delta / (self.ts.m + 1)
        acc_i = rs.or_acceptance_binomial(self.ts.case_i_threshold, self.x,
                                          self.ts, step=self.step)
        assert acc_i >= 1.0 - 3.0 * dp - 1e-3
        acc_ii = rs.or_acceptance_binomial(self.ts.case_ii_threshold, self.x,
                                           self.ts, step=self.step)
        assert acc_ii <= 2.0 * dp + 1e-3

    def test_case_ii_monotone_decreasing_in_x(self):
        p = self.ts.case_ii_threshold
        accs = [rs.or_acceptance_binomial(p, x, self.ts, step=self.step)
                for x in (2000, 8000, self.x)]
        assert accs[0] > accs[1] > accs[2]

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError):
            rs.or_acceptance_binomial(1.5, 100, self.ts)


class TestOrRepetitions:
    def test_reference_value(self):
        reps = rs.or_repetitions(1.0 / 8.0, 4, 0.01)
        assert reps.K == 767
        assert reps.total == 3068

    def test_doubling_gap_quarts_K(self):
        k1 = rs.or_repetitions(0.1, 4, 0.01).K
        k2 = rs.or_repetitions(0.2, 4, 0.01).K
        assert abs(k2 - k1 / 4.0) <= 1.0

    def test_degenerate_delta_tilde(self):
        with pytest.warns(UserWarning):
            assert rs.or_repetitions(0.5, 1, 1.0).K == 0

    def test_rejects_nonpositive_gap(self):
        with pytest.raises(ValueError):
            rs.or_repetitions(0.0, 4, 0.01)


class TestComplexityReport:
    def test_small_report_finite(self):
        rep = rs.complexity_report(2, 1, 0.5)
        assert rep.T >= 1 and rep.qet_degree >= 1 and rep.copies_x >= 1
        assert rep.total_block_encoding_queries >= 1.0
        assert rep.qubit_estimate >= 1

    def test_spectral_toggle_changes_only_amplification(self):
        a = rs.complexity_report(4096, 50, 0.05, spectral_condition=False)
        b = rs.complexity_report(4096, 50, 0.05, spectral_condition=True)
        assert a.T == b.T and a.qet_degree == b.qet_degree
        assert a.copies_x == b.copies_x
        assert b.amplification_rounds < a.amplification_rounds
        ratio = b.amplification_rounds / a.amplification_rounds
        expected = (np.log(4096) ** 2 / 4096) ** 0.25
        assert ratio == pytest.approx(expected, rel=1e-12)

    def test_epsilon_halving_laws(self):
        a = rs.complexity_report(1024, 50, 0.1)
        b = rs.complexity_report(1024, 50, 0.05)
        assert b.T == pytest.approx(4 * a.T, rel=1e-3)
        assert b.beta_max == pytest.approx(2 * a.beta_max, rel=1e-12)
        # sqrt(beta) law up to the log(1/mu) factor
        log_ratio = np.log(1.0 / rs.qet_mu(10, 0.05)) / np.log(1.0 / rs.qet_mu(10, 0.1))
        assert b.qet_degree == pytest.approx(
            np.sqrt(2) * log_ratio * a.qet_degree, rel=0.01)

    @pytest.mark.parametrize("field,power,vary", [
        ("amplification_rounds", 0.5, "N"),
        ("T", -2.0, "epsilon"),
        ("copies_x", -2.0, "xi"),
    ])
    def test_log_log_slopes(self, field, power, vary):
        # two decades, log factors divided out where the formula carries them
        if vary == "N":
            xs = [2**k for k in (8, 10, 12, 14, 16)]
            vals = []
            for N in xs:
                rep = rs.complexity_report(N, 50, 0.05)
                vals.append(getattr(rep, field))
        elif vary == "epsilon":
            xs = np.geomspace(0.005, 0.5, 6)
            vals = []
            for e in xs:
                rep = rs.complexity_report(1024, 50, float(e), xi=0.05)
                vals.append(getattr(rep, field) / np.log(1024))
        else:
            xs = np.geomspace(0.005, 0.5, 6)
            vals = []
            for x in xs:
                rep = rs.complexity_report(1024, 50, 0.05, xi=float(x))
                vals.append(getattr(rep, field) / np.log(51.0 / (1 / 184.0)))
        slope = np.polyfit(np.log(np.asarray(xs, dtype=float)),
                           np.log(np.asarray(vals, dtype=float)), 1)[0]
        assert abs(slope - power) <= 0.1 * abs(power)

    def test_tpq_gate_formulas_scale(self):
        # generic: sqrt(N); spectral: N^{1/4} after removing the log factors
        Ns = [2**k for k in (10, 12, 14, 16, 18, 20)]
        gen, spc = [], []
        for N in Ns:
            logs = np.log(N / 0.05)
            gen.append(rs.tpq_prep_gates_generic(N, 0.05)
                       / (np.sqrt(np.log(N)) * logs))
            spc.append(rs.tpq_prep_gates_spectral(N, 0.05, 0.05)
                       / (np.log(N) ** 0.5 * logs))
        s_gen = np.polyfit(np.log(Ns), np.log(gen), 1)[0]
        s_spc = np.polyfit(np.log(Ns), np.log(spc), 1)[0]
        assert abs(s_gen - 0.5) <= 0.05
        assert abs(s_spc - 0.25) <= 0.025


class TestToffoliEstimate:
    def test_2x2_proof_of_concept_calibration(self):
        est = rs.toffoli_estimate(LatticeSpec(2, 2), 0.05, "proof_of_concept")
        assert 1.61e6 / 100.0 <= est.gates <= 1.61e6 * 100.0
        assert abs(est.qubits - 13) <= 4

    def test_amplified_geq_proof_of_concept(self):
        for shape in ((2, 2), (4, 4), (6, 6)):
            spec = LatticeSpec(*shape)
            amp = rs.toffoli_estimate(spec, 0.05, "amplified")
            poc = rs.toffoli_estimate(spec, 0.05, "proof_of_concept")
            assert amp.gates >= poc.gates
            assert amp.qubits >= poc.qubits

    def test_monotone_in_lattice_size(self):
        gates = [rs.toffoli_estimate(LatticeSpec(k, k), 0.05).gates
                 for k in (2, 4, 6)]
        assert gates[0] < gates[1] < gates[2]

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            rs.toffoli_estimate(LatticeSpec(2, 2), 0.05, "exact")
