"""Runs the CLI on a small synthetic corpus and validates its JSON reports."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource

cli, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])

schemas = {}
registry = Registry()
for path in sorted(schema_dir.glob("*.schema.json")):
    doc = json.loads(path.read_text())
    schemas[path.name] = doc
    registry = registry.with_resource(doc["$id"], Resource.from_contents(doc))


def check(report, schema_name):
    validator = jsonschema.Draft202012Validator(schemas[schema_name], registry=registry)
    errors = sorted(validator.iter_errors(json.loads(report.read_text())), key=str)
    for e in errors:
        print(f"{report.name}: {e.json_path}: {e.message}")
    return not errors


def run(*args):
    subprocess.run([cli, *args], check=True, stdout=subprocess.DEVNULL)


with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    data = tmp / "synthetic.jsonl"
    run("synth", "--large", "3x30", "--small", "6x5..8", "--seed", "4", "--out", str(data))
    ok = True
    for name, extra in [("cutoff.json", ["--k", "6"]), ("prop.json", ["--p", "0.15"]),
                        ("one.json", ["--retries", "1"])]:
        run("evaluate", "--data", str(data), "--out", str(tmp / name), *extra)
        ok &= check(tmp / name, "evaluation_report.schema.json")
    run("compare", "--data", str(data), "--retries", "2", "--out", str(tmp / "cmp.json"),
        "--engine", "base=builtin")
    ok &= check(tmp / "cmp.json", "comparison_report.schema.json")
    print("schemas OK" if ok else "schema violations found")
    sys.exit(0 if ok else 1)
