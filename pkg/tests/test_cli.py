import csv
import io
import statistics
from pathlib import Path

import pytest

from adasub.cli import HEADER, main, read_config
from adasub.exceptions import ParseError
from adasub.seeding import mix, splitmix64

DATA = Path(__file__).parent / "data"
SMALL_INFMAX = ["infmax", "--n-src", "30", "--n-sink", "30", "--edge-prob", "0.05", "--k", "5", "--trials", "3"]
SMALL_FEATURE = ["feature", "--n", "20", "--m", "15", "--sparsity", "4", "--k", "5", "--trials", "2", "--samples", "8", "--scenarios", "4"]


def run(argv):
    out = io.StringIO()
    code = main(argv, stdout=out)
    return code, out.getvalue()


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestSeeding:
    def test_splitmix_reference(self):
        # first outputs of the reference generator seeded with 0
        assert splitmix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
        assert mix(0, 0) == 0xE220A8397B1DCDAF

    def test_mix_distinct(self):
        vals = {mix(s, i) for s in range(20) for i in range(20)}
        assert len(vals) == 400


class TestInfmax:
    def test_rows_and_header(self, tmp_path):
        out = tmp_path / "r.csv"
        code, text = run(SMALL_INFMAX + ["--out", str(out)])
        assert code == 0
        rows = read_rows(out)
        assert rows[0] == HEADER
        assert len(rows) - 1 == 3 * 4 * 5
        assert all(r[5] == "" for r in rows[1:])
        assert text.startswith("algorithm,budget,mean,count")
        assert (tmp_path / "r.csv.summary.csv").read_text() == text

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            assert run(SMALL_INFMAX + ["--model", "elt", "--seed", "7", "--out", str(p)])[0] == 0
        assert a.read_bytes() == b.read_bytes()
        run(SMALL_INFMAX + ["--model", "elt", "--seed", "8", "--out", str(b)])
        assert a.read_bytes() != b.read_bytes()

    def test_values_nondecreasing_in_budget(self, tmp_path):
        out = tmp_path / "r.csv"
        run(SMALL_INFMAX + ["--model", "ic", "--out", str(out)])
        rows = read_rows(out)[1:]
        series = {}
        for trial, alg, budget, value, _, _ in rows:
            series.setdefault((trial, alg), []).append((int(budget), float(value)))
        for pts in series.values():
            vals = [v for _, v in sorted(pts)]
            assert vals == sorted(vals)

    def test_timing(self, tmp_path):
        out = tmp_path / "r.csv"
        run(SMALL_INFMAX + ["--trials", "1", "--timing", "--out", str(out)])
        assert all(float(r[5]) >= 0 for r in read_rows(out)[1:])

    def test_stdout(self):
        code, text = run(["infmax", "--graph", "file", "--path", str(DATA / "tiny_edges.txt"), "--model", "ic", "--k", "2", "--trials", "1"])
        assert code == 0
        assert text.splitlines()[0] == ",".join(HEADER)

    def test_star(self):
        code, text = run(["infmax", "--graph", "star", "--k", "3", "--trials", "2"])
        assert code == 0


class TestFeature:
    def test_rows_and_determinism(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            assert run(SMALL_FEATURE + ["--seed", "3", "--out", str(p)])[0] == 0
        assert a.read_bytes() == b.read_bytes()
        rows = read_rows(a)
        assert len(rows) - 1 == 2 * 3 * 5
        assert {r[1] for r in rows[1:]} == {"adaptive", "non-adaptive", "noise-oblivious"}


class TestRatio:
    def test_star(self, tmp_path):
        out = tmp_path / "r.csv"
        code, text = run(["ratio", "--instance", "star", "--k", "3", "--out", str(out)])
        assert code == 0
        vals = {r[2]: float(r[3]) for r in read_rows(out)[1:]}
        assert vals["gamma"] == pytest.approx(2 / 3)
        assert vals["zeta_star"] == pytest.approx(3.0)
        assert "gamma = " in text

    def test_random_deterministic(self):
        a = run(["ratio", "--instance", "triggering-random", "--seed", "4"])
        b = run(["ratio", "--instance", "triggering-random", "--seed", "4"])
        assert a == b and a[0] == 0

    def test_tightgap_and_chain(self):
        code, text = run(["ratio", "--instance", "tightgap", "--a", "1", "--p", "0.5", "--M", "2"])
        assert code == 0
        # k=2, a p M = 1: gap = (1 + 1/2) / 2
        assert "gap = 0.75" in text
        assert run(["ratio", "--instance", "chain", "--k", "2", "--eps", "0.5"])[0] == 0

    def test_cap_exceeded(self, tmp_path):
        out = tmp_path / "r.csv"
        code, text = run(["ratio", "--instance", "star", "--k", "4", "--cap", "30", "--out", str(out)])
        assert code == 1
        assert "skipped" in text
        assert len(read_rows(out)) < 5


class TestVerify:
    def test_case(self):
        code, text = run(["verify", "ygo"])
        assert code == 0 and text.strip().endswith("ygo: PASS")

    def test_unknown_case(self):
        assert run(["verify", "nope"])[0] == 2


class TestErrors:
    def test_usage(self):
        assert run([])[0] == 2
        assert run(["infmax", "--k", "0"])[0] == 2
        assert run(["infmax", "--model", "sir"])[0] == 2

    def test_missing_file(self, tmp_path):
        assert run(["infmax", "--graph", "file", "--path", str(tmp_path / "none.txt")])[0] == 2
        assert run(["infmax", "--graph", "file"])[0] == 2

    def test_bad_file(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("e 0 0 0.5\ne 0 0 0.5\n")
        assert run(["infmax", "--graph", "file", "--path", str(p)])[0] == 2

    def test_bad_params(self):
        assert run(["ratio", "--instance", "tightgap", "--a", "100", "--p", "0.2", "--M", "5"])[0] == 2


class TestConfig:
    def test_read(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# comment\nn-src = 30\nk=5 # inline\n\n")
        assert read_config(p) == {"n_src": "30", "k": "5"}

    def test_bad_line(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("k 5\n")
        with pytest.raises(ParseError):
            read_config(p)

    def test_flags_override(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("n_src = 30\nn_sink = 30\nedge_prob = 0.05\nk = 5\ntrials = 3\nseed = 7\n")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(["infmax", "--config", str(cfg), "--out", str(a)])[0] == 0
        assert run(SMALL_INFMAX + ["--seed", "7", "--out", str(b)])[0] == 0
        assert a.read_bytes() == b.read_bytes()
        assert run(["infmax", "--config", str(cfg), "--trials", "1", "--out", str(a)])[0] == 0
        assert len(read_rows(a)) - 1 == 4 * 5

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("colour = red\n")
        assert run(["infmax", "--config", str(cfg)])[0] == 2
        cfg.write_text("k = five\n")
        assert run(["infmax", "--config", str(cfg)])[0] == 2


class TestSpecExamples:
    def test_star_row_count(self, tmp_path):
        out = tmp_path / "r.csv"
        assert run(["infmax", "--graph", "star", "--star-k", "3", "--k", "1", "--trials", "1", "--out", str(out)])[0] == 0
        assert len(read_rows(out)) - 1 == 4
        assert len((tmp_path / "r.csv.summary.csv").read_text().splitlines()) == 5

    def test_zero_noise_curves_coincide(self, tmp_path):
        out = tmp_path / "r.csv"
        run(SMALL_FEATURE + ["--sigma", "0", "--out", str(out)])
        vals = {}
        for trial, alg, budget, value, _, _ in read_rows(out)[1:]:
            vals.setdefault((trial, budget), set()).add(value)
        assert all(len(v) == 1 for v in vals.values())

    def test_sample_count_stability(self, tmp_path):
        means = {}
        for samples in ("16", "32"):
            out = tmp_path / f"s{samples}.csv"
            argv = ["feature", "--n", "30", "--m", "20", "--sparsity", "5", "--k", "8", "--trials", "10", "--samples", samples]
            run(argv + ["--out", str(out)])
            vals = [float(r[3]) for r in read_rows(out)[1:] if r[1] == "adaptive" and r[2] == "8"]
            means[samples] = (statistics.fmean(vals), statistics.stdev(vals) / len(vals) ** 0.5)
        (a, se), (b, _) = means["16"], means["32"]
        assert abs(a - b) < 3 * se

    def test_star_ratio(self):
        code, text = run(["ratio", "--instance", "star", "--k", "2"])
        assert code == 0 and text.startswith("gamma = 0.75 ")

    def test_ic_ratio(self):
        code, text = run(["ratio", "--instance", "ic-random", "--k", "2", "--seed", "7"])
        assert code == 0 and text.startswith("gamma = 1.0 ")

    def test_tight_gap_example(self, tmp_path):
        out = tmp_path / "r.csv"
        code, _ = run(["ratio", "--instance", "tightgap", "--k", "2", "--a", "10", "--p", "0.1", "--M", "5",
                       "--metrics", "gamma,beta,gap", "--out", str(out)])
        assert code == 0
        vals = {r[2]: float(r[3]) for r in read_rows(out)[1:]}
        assert vals["beta"] == pytest.approx(1.0)
        assert vals["gap"] == pytest.approx(1 / 3)
        assert vals["gamma"] == pytest.approx(0.25)

    def test_bad_metrics(self):
        assert run(["ratio", "--metrics", "gamma,delta"])[0] == 2

    @pytest.mark.parametrize("case", ["lemma-b2", "greedy-bound"])
    def test_verify_cases(self, case):
        code, text = run(["verify", case])
        assert code == 0 and text.strip().endswith(f"{case}: PASS")
