import json
import math

import numpy as np
import pytest

from oracle_uniqueness import brute_force_soundness, enumerate_block_words
from selfaffine.core import SystemSpec, Word
from selfaffine.errors import CannotSeparate, SearchExhausted
from selfaffine.uniqueness import (
    COUNTABLY_INFINITE,
    FINITE_NONEMPTY,
    GOLDEN_RATIO,
    PARALLELOGRAM,
    POSITIVE_DIM,
    TOTALLY_DISCONNECTED,
    UNCOUNTABLE_ZERO_DIM,
    SearchBounds,
    certify_uniqueness,
    check_lemma_conditions,
    classify_mixed_equal,
    classify_rational,
    code_entropy,
    is_unambiguous,
    komornik_loreti,
    komornik_loreti_residual,
    thue_morse,
    verify_uniqueness_certificate,
)

W = Word.from_str
RAUZY_KAPPA = complex(-0.4196433776070805, 0.6062907292071993)


class TestLemmaConditions:
    def test_crowded_complex_inconclusive(self):
        spec = SystemSpec.complex_pair(0.95, 0.1)
        with pytest.raises(CannotSeparate):
            check_lemma_conditions(spec, W("m"), W("p"), W("pp"))

    def test_mixed_template_smallest_prefix(self):
        # the smallest passing run of p after the leading m, found by scan
        spec = SystemSpec.mixed_real(0.55, 0.8)
        passing = None
        for L in range(1, 10):
            u = W("m") + W("p") * L
            try:
                margins = check_lemma_conditions(spec, u, W("p"), W("pp"))
                passing = (L, margins)
                break
            except CannotSeparate:
                continue
        assert passing is not None
        L, margins = passing
        assert all(m > 0 for m in margins)

    def test_jordan_template(self):
        spec = SystemSpec.jordan(0.7)
        margins = None
        for L in range(1, 16):
            try:
                margins = check_lemma_conditions(
                    spec, W("m") * L, W("p"), W("p") * 8
                )
                break
            except CannotSeparate:
                continue
        assert margins is not None
        assert all(m > 0 for m in margins)

    def test_input_validation(self):
        spec = SystemSpec.mixed_real(0.55, 0.8)
        with pytest.raises(ValueError):
            check_lemma_conditions(spec, W(""), W("p"), W("pp"))
        with pytest.raises(ValueError):
            check_lemma_conditions(spec, W("m"), W("p"), W("p"))


class TestUnambiguity:
    def test_paper_examples(self):
        assert is_unambiguous(W("m"), W("pp"))
        assert not is_unambiguous(W("mpmp"), W("mp"))

    def test_brute_force_agreement(self, rng):
        # exhaustive double-factorization oracle on all short word pairs
        def brute(x: str, y: str, max_len: int = 12) -> bool:
            code = (x, y)

            def factorizations(s):
                if not s:
                    return 1
                total = 0
                for c in code:
                    if s.startswith(c):
                        total += factorizations(s[len(c):])
                        if total > 1:
                            return total
                return total

            # breadth-first over concatenations up to max_len
            frontier = [""]
            seen = set()
            while frontier:
                nxt = []
                for s in frontier:
                    for c in code:
                        t = s + c
                        if len(t) <= max_len and t not in seen:
                            seen.add(t)
                            if factorizations(t) > 1:
                                return False
                            nxt.append(t)
                frontier = nxt
            return True

        alphabet = "mp"
        for _ in range(60):
            n1 = int(rng.integers(1, 5))
            n2 = int(rng.integers(1, 5))
            x = "".join(alphabet[i] for i in rng.integers(0, 2, n1))
            y = "".join(alphabet[i] for i in rng.integers(0, 2, n2))
            if x == y:
                continue
            assert is_unambiguous(W(x), W(y)) == brute(x, y), (x, y)


class TestEntropy:
    def test_equal_lengths(self):
        for length in (1, 2, 3, 7):
            assert code_entropy(length, length) == pytest.approx(
                math.log(2) / length, abs=1e-11
            )

    def test_golden_ratio(self):
        assert code_entropy(1, 2) == pytest.approx(math.log(GOLDEN_RATIO), abs=1e-11)

    def test_dp_word_count_oracle(self):
        # counts of concatenations with block lengths 3 and 5 grow at the
        # entropy rate; slope test on n <= 60
        h = code_entropy(3, 5)
        counts = [0] * 61
        counts[0] = 1
        for n in range(1, 61):
            c = 0
            if n >= 3:
                c += counts[n - 3]
            if n >= 5:
                c += counts[n - 5]
            counts[n] = c
        ns = np.arange(30, 61)
        logs = np.log([max(counts[n], 1) for n in ns])
        slope = np.polyfit(ns, logs, 1)[0]
        assert slope == pytest.approx(h, abs=0.01)


class TestThueMorse:
    def test_first_sixteen(self):
        assert "".join(map(str, thue_morse(16))) == "0110100110010110"

    def test_substitution_fixed_point(self):
        bits = thue_morse(4096)
        for k in range(2048):
            assert bits[2 * k] == bits[k]
            assert bits[2 * k + 1] == 1 - bits[k]

    def test_popcount_oracle(self):
        bits = thue_morse(1 << 16)
        for k in range(0, 1 << 16, 97):
            assert bits[k] == bin(k).count("1") % 2


class TestKomornikLoreti:
    def test_value(self):
        assert komornik_loreti() == pytest.approx(1.787231650, abs=1e-8)

    def test_bracket(self):
        assert GOLDEN_RATIO < komornik_loreti() < 2

    def test_residual(self):
        assert abs(komornik_loreti_residual(komornik_loreti(), terms=200)) < 1e-10


class TestClassification:
    def test_rational_examples(self):
        c = classify_rational(0.7, 1, 4)
        assert (c.q_prime, c.uniqueness_class) == (2, POSITIVE_DIM)
        assert c.beta == pytest.approx(0.7 ** (-2.0))
        c = classify_rational(0.9, 1, 4)
        assert (c.q_prime, c.uniqueness_class) == (2, FINITE_NONEMPTY)
        c = classify_rational(0.7, 1, 5)
        assert (c.q_prime, c.uniqueness_class) == (5, POSITIVE_DIM)
        assert c.beta == pytest.approx(0.7 ** (-5.0))

    def test_beta_sweep_classes(self):
        beta_star = komornik_loreti()
        sweep = [
            (1.3, FINITE_NONEMPTY),
            (1.7, COUNTABLY_INFINITE),
            (beta_star, UNCOUNTABLE_ZERO_DIM),
            (1.9, POSITIVE_DIM),
        ]
        for beta, expected in sweep:
            rho = beta ** (-0.5)  # q' = 2 via p/q = 1/4
            c = classify_rational(rho, 1, 4)
            assert c.uniqueness_class == expected, beta

    def test_monotone_in_beta(self):
        order = [FINITE_NONEMPTY, COUNTABLY_INFINITE, UNCOUNTABLE_ZERO_DIM, POSITIVE_DIM]
        beta_star = komornik_loreti()
        ranks = []
        for beta in (1.2, 1.7, beta_star, 1.9):
            c = classify_rational(beta ** (-0.5), 1, 4)
            ranks.append(order.index(c.uniqueness_class))
        assert ranks == sorted(ranks)

    def test_boundary_flags(self):
        c = classify_rational(GOLDEN_RATIO ** (-0.5), 1, 4)
        assert c.boundary == "G"
        c = classify_rational(komornik_loreti() ** (-0.5), 1, 4)
        assert c.boundary == "beta_star"
        assert c.uniqueness_class == UNCOUNTABLE_ZERO_DIM

    def test_mixed_equal(self):
        c = classify_mixed_equal(0.6)
        assert c.geometry == TOTALLY_DISCONNECTED
        c = classify_mixed_equal(0.75)
        assert c.geometry == PARALLELOGRAM
        assert c.uniqueness_class == COUNTABLY_INFINITE
        assert c.beta == pytest.approx(16.0 / 9.0)
        c = classify_mixed_equal(1 / math.sqrt(2))
        assert c.geometry == PARALLELOGRAM
        assert c.beta == pytest.approx(2.0)
        assert c.uniqueness_class == POSITIVE_DIM

    def test_mixed_equal_dichotomy_near_threshold(self):
        lo = classify_mixed_equal(1 / math.sqrt(2) - 0.01)
        hi = classify_mixed_equal(1 / math.sqrt(2) + 0.01)
        assert lo.geometry == TOTALLY_DISCONNECTED
        assert hi.geometry == PARALLELOGRAM


class TestCertificates:
    def test_mixed(self):
        cert = certify_uniqueness(SystemSpec.mixed_real(0.55, 0.8))
        assert all(m > 0 for m in cert.margins)
        assert cert.entropy > 0
        assert cert.dim_lower_bound is None  # not conformal
        assert str(cert.u).startswith("m")

    def test_jordan(self):
        cert = certify_uniqueness(SystemSpec.jordan(0.7))
        assert all(m > 0 for m in cert.margins)
        assert cert.entropy > 0

    def test_rauzy(self):
        spec = SystemSpec.complex_pair(RAUZY_KAPPA.real, RAUZY_KAPPA.imag)
        cert = certify_uniqueness(spec)
        assert all(m > 0 for m in cert.margins)
        assert cert.entropy > 0
        assert cert.dim_lower_bound == pytest.approx(
            cert.entropy / (-math.log(abs(RAUZY_KAPPA)))
        )

    def test_search_exhausted(self):
        # far outside any certifiable region: bounds overlap massively
        spec = SystemSpec.complex_pair(0.93, 0.25)
        with pytest.raises(SearchExhausted):
            certify_uniqueness(spec, SearchBounds(max_prefix=3, max_power=2, window=64))

    def test_equal_mixed_routed_to_classification(self):
        with pytest.raises(ValueError):
            certify_uniqueness(SystemSpec.mixed_real(0.75, 0.75))

    def test_json_round_trip_and_verify(self):
        cert = certify_uniqueness(SystemSpec.mixed_real(0.55, 0.8))
        blob = json.dumps(cert.to_json_dict())
        again = verify_uniqueness_certificate(json.loads(blob))
        assert again.margins == pytest.approx(cert.margins)
        assert again.entropy == cert.entropy

    def test_verify_rejects_tamper(self):
        cert = certify_uniqueness(SystemSpec.mixed_real(0.55, 0.8))
        d = cert.to_json_dict()
        d["entropy"] = 99.0
        with pytest.raises(ValueError):
            verify_uniqueness_certificate(d)

    def test_report_format(self):
        cert = certify_uniqueness(SystemSpec.jordan(0.7))
        report = cert.format_report()
        assert str(cert.u) in report
        assert "entropy" in report


class TestSoundnessOracle:
    def test_mixed_certificate(self):
        cert = certify_uniqueness(SystemSpec.mixed_real(0.55, 0.8))
        assert brute_force_soundness(cert)

    def test_jordan_certificate(self):
        cert = certify_uniqueness(SystemSpec.jordan(0.7))
        assert brute_force_soundness(cert)

    def test_rauzy_certificate(self):
        spec = SystemSpec.complex_pair(RAUZY_KAPPA.real, RAUZY_KAPPA.imag)
        cert = certify_uniqueness(spec)
        assert brute_force_soundness(cert)


class TestShiftConsistency:
    def test_forced_first_symbols(self, rng):
        # every suffix of every code word must start with one of the four
        # condition patterns (string-level check, 100 random suffixes)
        cert = certify_uniqueness(SystemSpec.mixed_real(0.55, 0.8))
        u, v, w = str(cert.u), str(cert.v), str(cert.w)
        patterns = (
            [u[i:] + v + u for i in range(len(u))]
            + [v[j:] + u for j in range(len(v))]
            + [u[i:] + w + u for i in range(len(u))]
            + [w[j:] + u for j in range(len(w))]
        )
        uv, uw = u + v, u + w
        for _ in range(100):
            blocks = [uv if b else uw for b in rng.integers(0, 2, size=8)]
            word = "".join(blocks)
            shift = int(rng.integers(0, len(uv) + len(uw)))
            tail = word[shift:]
            assert any(
                tail.startswith(pat) for pat in patterns
            ), (shift, tail[:20])


class TestRauzyLanguage:
    def test_fibonacci_word_counts(self):
        # words with no three consecutive identical symbols, starting with
        # m: counts follow the Fibonacci recurrence exactly
        def count(n):
            # dp over (last symbol, run length)
            from collections import defaultdict

            dp = defaultdict(int)
            dp[("m", 1)] = 1
            for _ in range(n - 1):
                nxt = defaultdict(int)
                for (sym, run), c in dp.items():
                    other = "p" if sym == "m" else "m"
                    nxt[(other, 1)] += c
                    if run < 2:
                        nxt[(sym, run + 1)] += c
                dp = nxt
            return sum(dp.values())

        fib = [1, 2]
        while len(fib) < 30:
            fib.append(fib[-1] + fib[-2])
        for n in range(1, 31):
            assert count(n) == fib[n - 1], n

    def test_entropy_is_log_golden(self):
        # growth rate of the Fibonacci counts
        fib = [1.0, 2.0]
        for _ in range(60):
            fib.append(fib[-1] + fib[-2])
        ratio = fib[-1] / fib[-2]
        assert math.log(ratio) == pytest.approx(math.log(GOLDEN_RATIO), abs=1e-10)
