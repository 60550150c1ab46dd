import json
import pathlib

import pytest

import engorgio

jsonschema = pytest.importorskip("jsonschema")
referencing = pytest.importorskip("referencing")

SCHEMAS = pathlib.Path(__file__).resolve().parents[2] / "schemas"


def registry():
    return referencing.Registry().with_resources(
        [(p.name, referencing.Resource.from_contents(json.loads(p.read_text()))) for p in SCHEMAS.glob("*.json")]
    )


def validate(doc, schema_name):
    schema = json.loads((SCHEMAS / schema_name).read_text())
    jsonschema.Draft202012Validator(schema, registry=registry()).validate(doc)


def test_shipped_configs_match_schema():
    for cfg in (SCHEMAS.parent / "configs").glob("*.json"):
        validate(json.loads(cfg.read_text()), "config.schema.json")


def test_artifacts_match_schemas(tmp_path):
    out = tmp_path / "out"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "seed": 2,
                "output_dir": str(out),
                "train": {"dims": {"hidden": 16, "max_context": 64}, "steps": 10, "corpus_lines": 80},
                "attack": {"steps": 2, "prompt_length": 8},
                "eval": {"n_samples": 4, "n_prompts": 4, "temperatures": [0.1, 0.5],
                         "sponge": {"budget": 2, "samples_per_estimate": 1}},
                "service": {"flops_out_lens": [0, 8]},
            }
        )
    )
    c = str(cfg)
    for args in (["train"], ["attack"], ["eval"], ["eval", "--baseline", "sponge"], ["sweep"], ["simulate"]):
        code, _, err = engorgio.run_cli(args + ["-c", c])
        assert code == 0, err
    code, _, err = engorgio.run_cli(["report", "-c", c, str(out / "eval_engorgio.json"), str(out / "eval_sponge.json")])
    assert code == 0, err

    pairs = {
        "attack.json": "attack_bundle.schema.json",
        "eval_engorgio.json": "eval_report.schema.json",
        "eval_sponge.json": "eval_report.schema.json",
        "sweep_engorgio.json": "sweep.schema.json",
        "simulate.json": "simulate.schema.json",
        "report.json": "report.schema.json",
        "train.json": "train.schema.json",
        "model.bin.json": "checkpoint.schema.json",
    }
    for artifact, schema in pairs.items():
        validate(json.loads((out / artifact).read_text()), schema)
