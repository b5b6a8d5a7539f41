"""End-to-end checks of the testspace command-line tool.

Usage: cli_smoke.py <path to testspace binary>
"""

import json
import math
import subprocess
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

BINARY = sys.argv[1] if len(sys.argv) > 1 else "testspace"
failures = []


def run(*args, cwd=None):
    return subprocess.run([BINARY, *args], capture_output=True, text=True, cwd=cwd)


def check(condition, message):
    if not condition:
        failures.append(message)
        print("FAIL", message)


def ok_json(*args, cwd=None):
    proc = run(*args, cwd=cwd)
    check(proc.returncode == 0, f"{' '.join(args)} exited {proc.returncode}: {proc.stderr.strip()}")
    return json.loads(proc.stdout) if proc.returncode == 0 else None


def expect_error(code, kind, *args, cwd=None):
    proc = run(*args, cwd=cwd)
    check(proc.returncode == code, f"{' '.join(args)} exited {proc.returncode}, expected {code}")
    try:
        error = json.loads(proc.stderr)["error"]
        check(error["kind"] == kind, f"{' '.join(args)} error kind {error['kind']}, expected {kind}")
        check(bool(error["message"]), f"{' '.join(args)} error has no message")
    except (ValueError, KeyError) as exc:
        check(False, f"{' '.join(args)} stderr is not an error document ({exc}): {proc.stderr!r}")


with tempfile.TemporaryDirectory() as tmp:
    work = Path(tmp)

    doc = ok_json("gen", "--family", "diamond", "--n", "2", "--weighting", "scaled")
    if doc:
        graph = doc["result"]["graph"]
        check(len(graph["vertices"]) == 12, "D_2 vertex count")
        check(len(graph["edges"]) == 16, "D_2 edge count")
        meta = doc["meta"]
        check(meta["command"] == "gen", "meta command")
        check(meta["config"]["--family"] == "diamond", "config echo")
        check(meta["config"]["--weighting"] == "scaled", "config echo of weighting")
        check("version" in meta and "timing_ms" in meta, "meta fields")

    doc = ok_json("markov", "--walk", "tree", "--n", "3", "--p", "2", "--mode", "exact")
    if doc:
        check(doc["result"]["rhs"] == "8", "markov rhs")
        check(doc["result"]["piLower"] >= math.sqrt(3), "markov piLower")

    doc = ok_json("markov", "--walk", "tree", "--n", "6", "--mode", "analytic")
    if doc:
        check(doc["result"]["rhs"] == "64", "analytic rhs")

    proc = run("-o", str(work / "t4.json"), "gen", "--family", "tree", "--n", "4")
    check(proc.returncode == 0 and proc.stdout == "", "gen with --output writes nothing to stdout")
    check(json.loads((work / "t4.json").read_text())["meta"]["config"]["--output"] == str(work / "t4.json"),
          "output file carries the config")
    ok_json("distort", "--bourgain", "4", "--write-vectors", str(work / "bourgain.csv"))
    doc = ok_json("distort", "--space", str(work / "t4.json"), "--vectors", str(work / "bourgain.csv"),
                  "--target", "summing")
    if doc:
        check(Fraction(doc["result"]["report"]["distortion_power"]) <= 3, "Bourgain distortion from files")

    proc = run("--format", "csv", "apsp", "--graph", str(work / "t4.json"))
    check(proc.returncode == 0, "apsp csv")
    rows = [line.split(",") for line in proc.stdout.strip().splitlines()]
    check(len(rows) == 31 and all(len(r) == 31 for r in rows), "apsp csv shape")
    check(rows and rows[0][1] == "1" and rows[3][4] == "2", "apsp csv entries")

    doc = ok_json("l2min", "--cycle", "4", "--emit-gram", str(work / "gram.csv"))
    if doc:
        check(abs(doc["result"]["c_star"] - math.sqrt(2)) < 1e-3, "C_4 optimum")
        gram = [[float(x) for x in line.split(",")] for line in (work / "gram.csv").read_text().splitlines()]
        check(len(gram) == 4 and all(len(r) == 4 for r in gram), "gram shape")

    first = ok_json("markov", "--walk", "diamond", "--n", "2", "--mode", "mc", "--seed", "5", "--samples", "2000")
    second = ok_json("markov", "--walk", "diamond", "--n", "2", "--mode", "mc", "--seed", "5", "--samples", "2000")
    if first and second:
        check(json.dumps(first["result"]) == json.dumps(second["result"]), "mc determinism")
        check(first["meta"]["config"] == second["meta"]["config"], "config determinism")
        check(first["meta"]["config"]["--seed"] == "5", "seed echo")

    doc = ok_json("rnp", "tree", "--n", "4")
    doc = ok_json("rnp", "lines", "--depth", "3")
    doc = ok_json("rnp", "martingale", "--diamond", "3", "--steps", "2")
    if doc:
        text = json.dumps(doc["result"])
        check("1/16" in text or "1/4" in text, "martingale constants as rational strings")

    doc = ok_json("oracle", "james", "--length", "2", "--bound", "3")
    if doc:
        check(doc["result"]["infimum"] == "1/3", "james infimum")
        check(doc["result"]["argmin"] == [1, -2], "james argmin")

    doc = ok_json("oracle", "cycle-tree", "--cycle", "8", "--max-tree", "6")
    if doc:
        check(doc["result"]["min_distortion"] is None, "no injective map of C_8 into 6 vertices")

    expect_error(2, "validation", "markov", "--mode", "mc")
    expect_error(3, "cap_exceeded", "markov", "--walk", "tree", "--n", "6", "--mode", "exact")
    expect_error(2, "validation", "gen", "--family", "diamond", "--bogus")
    expect_error(2, "validation", "gen", "--family", "nonsense")
    expect_error(2, "validation")
    expect_error(1, "io", "apsp", "--graph", str(work / "missing.json"))

    proc = run("--version")
    check(proc.returncode == 0 and proc.stdout.strip() != "", "version flag")

if failures:
    print(f"{len(failures)} check(s) failed")
    sys.exit(1)
print("cli smoke: all checks passed")
