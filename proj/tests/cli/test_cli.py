"""Command-line contract: exit codes, output formats, schemas, determinism."""

import json
import os
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

ROOT = Path(__file__).resolve().parents[2]
MODELS = ROOT / "data" / "models"
SCHEMAS = ROOT / "schemas"
GFRAG = os.environ.get("GFRAG_BIN", str(ROOT / "build" / "gfrag"))


def load_schemas():
    schemas = {p.name: json.loads(p.read_text()) for p in SCHEMAS.glob("*.schema.json")}
    registry = Registry().with_resources(
        (s["$id"], Resource.from_contents(s)) for s in schemas.values()
    )
    # relative "$ref": "model.schema.json" resolves against the "gfrag/" base
    return schemas, registry


SCHEMA, REGISTRY = load_schemas()


def validate(doc, name):
    jsonschema.Draft202012Validator(SCHEMA[name], registry=REGISTRY).validate(doc)


def run(*args, check_code=None):
    proc = subprocess.run([GFRAG, *map(str, args)], capture_output=True, text=True)
    if check_code is not None and proc.returncode != check_code:
        raise AssertionError(f"{args}: exit {proc.returncode}, stderr: {proc.stderr}")
    return proc


def model(name):
    return str(MODELS / f"{name}.json")


class KappaCommand(unittest.TestCase):
    def test_config_a_values(self):
        out = run("kappa", "--model", model("a"), "--q", "0,1,2", check_code=0).stdout
        lines = out.split("\n")
        self.assertTrue(all(not line.endswith("\r") for line in lines))
        rows = [line for line in lines if line and not line.startswith("#")]
        self.assertEqual(rows[0], "q,kappa,kappa_d1,kappa_d2")
        values = {float(r.split(",")[0]): float(r.split(",")[1]) for r in rows[1:]}
        self.assertAlmostEqual(values[0.0], 1.0, places=14)
        self.assertAlmostEqual(values[1.0], 0.5, places=14)
        self.assertAlmostEqual(values[2.0], 0.5, places=14)

    def test_header_echoes_model_and_version(self):
        out = run("kappa", "--model", model("d"), "--q", "3", check_code=0).stdout
        self.assertIn("# tool: gfrag", out)
        self.assertIn('# model: {"a":1.0,"b":-1.0', out)
        self.assertIn("\n3,3,4,2\n", out)

    def test_outside_domain_is_inf(self):
        out = run("kappa", "--model", model("density"), "--q", "0.25", check_code=0).stdout
        self.assertIn("\n0.25,inf,,\n", out)


class ExitCodes(unittest.TestCase):
    def test_pure_fragmentation_rejected(self):
        proc = run("roots", "--model", model("pure_frag"))
        self.assertEqual(proc.returncode, 2)
        self.assertIn("PureFragmentationExcluded", proc.stderr)

    def test_alpha_override_cannot_reenable_excluded_regime(self):
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "homog.json"
            path.write_text(json.dumps({"a": 0, "b": -0.5, "alpha": 0, "K": {"atoms": [[0.5, 1]]}}))
            run("kappa", "--model", path, check_code=0)
            proc = run("kappa", "--model", path, "--alpha-override", "-1")
            self.assertEqual(proc.returncode, 2)
            self.assertIn("PureFragmentationExcluded", proc.stderr)

    def test_usage_error(self):
        self.assertNotEqual(run("kappa", "--bogus").returncode, 0)
        self.assertNotEqual(run().returncode, 0)

    def test_missing_seed_is_validation_error(self):
        proc = run("sim-levy", "--model", model("a"), "--omega", "2")
        self.assertEqual(proc.returncode, 2)
        self.assertIn("seed", proc.stderr)

    def test_unknown_model_key(self):
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "bad.json"
            path.write_text(json.dumps({"a": 0, "b": 0, "alpha": 0, "K": {}, "gamma": 1}))
            proc = run("roots", "--model", path)
            self.assertEqual(proc.returncode, 2)
            self.assertIn('"gamma"', proc.stderr)

    def test_failed_suite_exits_3(self):
        proc = run("explode", "--model", model("c"), "--seed", "1", "--runs", "2",
                   "--max-events", "2000", "--horizon", "1")
        self.assertEqual(proc.returncode, 3)
        validate(json.loads(proc.stdout), "report.schema.json")


class Reports(unittest.TestCase):
    def test_homogeneous_example(self):
        proc = run("verify", "homogeneous", "--model", model("a"), "--t", "1", "--n", "10000", "--seed", "7")
        self.assertEqual(proc.returncode, 0, proc.stderr)
        rep = json.loads(proc.stdout)
        validate(rep, "report.schema.json")
        self.assertTrue(rep["pass"])
        self.assertEqual(rep["seed"], 7)
        self.assertTrue(all(abs(c["z"]) <= 3 for c in rep["checks"]))

    def test_every_suite_emits_a_valid_report(self):
        cases = [
            ("kappa", "d", []),
            ("levy", "d", ["--n", "2000"]),
            ("support", "a", ["--n", "20"]),
            ("t2", "d", ["--n", "200"]),
            ("entrance", "d", ["--n", "200"]),
            ("entrance", "d_pos", ["--n", "200"]),
            ("suplaw", "d_pos", ["--n", "200"]),
            ("clt", "brownian", ["--n", "2000"]),
            ("tails", "brownian", ["--n", "2000"]),
            ("rescaling", "d", ["--n", "200", "--t", "1,2"]),
        ]
        for suite, name, extra in cases:
            with self.subTest(suite=suite, model=name):
                proc = run("verify", suite, "--model", model(name), "--seed", "3", *extra)
                self.assertIn(proc.returncode, (0, 3), proc.stderr)
                rep = json.loads(proc.stdout)
                validate(rep, "report.schema.json")
                self.assertEqual(rep["pass"], proc.returncode == 0)

    def test_analytics_outputs(self):
        validate(json.loads(run("roots", "--model", model("b"), check_code=0).stdout), "analytics.schema.json")
        leg = json.loads(run("legendre", "--model", model("brownian"), "--r", "1", check_code=0).stdout)
        validate(leg, "analytics.schema.json")
        self.assertAlmostEqual(leg["theta"], 1.0, places=12)
        self.assertAlmostEqual(leg["kappa_star"], 1.0, places=12)


class Determinism(unittest.TestCase):
    def test_byte_identical_reruns(self):
        commands = [
            ["sim-levy", "--model", model("a"), "--seed", "5", "--omega", "2", "--t", "2"],
            ["sim-pssmp", "--model", model("d"), "--seed", "5", "--t", "1"],
            ["sim-branching", "--model", model("a"), "--seed", "5", "--horizon", "2"],
            ["verify", "levy", "--model", model("a"), "--seed", "5", "--n", "3000"],
        ]
        for cmd in commands:
            with self.subTest(cmd=cmd[0]):
                self.assertEqual(run(*cmd, check_code=0).stdout, run(*cmd, check_code=0).stdout)

    def test_threads_do_not_change_results(self):
        cmd = ["verify", "levy", "--model", model("d"), "--seed", "9", "--n", "5000"]
        self.assertEqual(run(*cmd, "--threads", "1").stdout, run(*cmd, "--threads", "3").stdout)

    def test_out_file_matches_stdout(self):
        cmd = ["sim-branching", "--model", model("a"), "--seed", "2", "--t", "0.5,1"]
        with tempfile.TemporaryDirectory() as d:
            out = Path(d) / "snap.csv"
            run(*cmd, "--out", out, check_code=0)
            self.assertEqual(out.read_text(), run(*cmd, check_code=0).stdout)
            self.assertEqual(sorted(p.name for p in Path(d).iterdir()), ["snap.csv"])
            self.assertIn("t,size\n", out.read_text())


class Config(unittest.TestCase):
    def test_config_file_drives_a_run(self):
        with tempfile.TemporaryDirectory() as d:
            cfg = Path(d) / "run.json"
            cfg.write_text(json.dumps({"model": str(MODELS / "a.json"), "seed": 4, "n": 3000}))
            validate(json.loads(cfg.read_text()), "config.schema.json")
            a = run("verify", "levy", "--config", cfg, check_code=0).stdout
            b = run("verify", "levy", "--model", model("a"), "--seed", "4", "--n", "3000", check_code=0).stdout
            self.assertEqual(a, b)

    def test_missing_model_file(self):
        with tempfile.TemporaryDirectory() as d:
            cfg = Path(d) / "run.json"
            cfg.write_text(json.dumps({"model": "nowhere.json", "seed": 1}))
            proc = run("roots", "--config", cfg)
            self.assertEqual(proc.returncode, 2)
            self.assertIn("not found", proc.stderr)

    def test_shipped_models_validate(self):
        for path in MODELS.glob("*.json"):
            with self.subTest(model=path.name):
                validate(json.loads(path.read_text()), "model.schema.json")


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1].startswith("--gfrag="):
        GFRAG = sys.argv.pop(1).split("=", 1)[1]
    unittest.main()
