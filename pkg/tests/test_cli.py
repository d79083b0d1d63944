import json
import os
import subprocess
import sys

import jsonschema
import pytest

from relcat.cli import main

SPEC_DIR = os.path.join(
    os.path.dirname(__file__), "..", "src", "relcat", "specs"
)
DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
DOCS_DIR = os.path.join(os.path.dirname(__file__), "..", "docs")


def spec(name: str) -> str:
    return os.path.join(SPEC_DIR, name)


def data(name: str) -> str:
    return os.path.join(DATA_DIR, name)


def schema(name: str) -> dict:
    with open(os.path.join(DOCS_DIR, name), "r", encoding="utf-8") as handle:
        return json.load(handle)


class TestCheck:
    def test_passing_file_exit_zero(self, capsys):
        assert main(["check", spec("otp_correctness_compact.rcat")]) == 0
        assert "EQUAL" in capsys.readouterr().out

    def test_failing_check_exit_one(self, capsys):
        assert main(["check", data("otp_broken_decryption.rcat")]) == 1
        assert "UNEQUAL" in capsys.readouterr().out

    def test_syntax_error_exit_two(self, capsys):
        assert main(["check", data("syntax_error.rcat")]) == 2
        assert "expected" in capsys.readouterr().err

    def test_type_error_exit_two(self):
        assert main(["check", data("type_error.rcat")]) == 2

    def test_missing_file_exit_two(self, capsys):
        assert main(["check", "/nonexistent.rcat"]) == 2

    def test_json_matches_schema(self, capsys):
        assert main(["check", spec("snake_equations.rcat"), "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        jsonschema.validate(payload, schema("check_report.schema.json"))
        assert payload["status"] == "pass"


class TestVerifyOtp:
    def test_group_two_passes(self, capsys):
        assert main(["verify-otp", "--group", "2", "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        jsonschema.validate(payload, schema("verify_otp_report.schema.json"))
        assert all(entry["holds"] for entry in payload["results"].values())

    def test_group_one_reports_exemption(self, capsys):
        assert main(["verify-otp", "--group", "1", "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert "encryption_not_invertible" in payload["notes"]

    def test_group_five_passes(self):
        assert main(["verify-otp", "--group", "5"]) == 0

    def test_instance_file(self):
        assert main(["verify-otp", "--file", data("instance_twisted_pad.rcat")]) == 0

    def test_invalid_group(self, capsys):
        assert main(["verify-otp", "--group", "0"]) == 2
        assert "error" in capsys.readouterr().err


class TestVerifyDh:
    def test_prime_five(self, capsys):
        assert main(["verify-dh", "--prime", "5", "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        jsonschema.validate(payload, schema("verify_dh_report.schema.json"))

    def test_identity_base_fails(self, capsys):
        code = main(
            ["verify-dh", "--prime", "5", "--include-identity", "--format", "json"]
        )
        assert code == 1
        payload = json.loads(capsys.readouterr().out)
        assert payload["witness"].startswith("base 1")

    def test_non_prime_usage_error(self, capsys):
        assert main(["verify-dh", "--prime", "4"]) == 2

    def test_cap_enforced(self, capsys):
        assert main(["verify-dh", "--prime", "17"]) == 2

    def test_no_erase_fails(self):
        assert main(["verify-dh", "--prime", "3", "--no-erase"]) == 1


class TestEnumerate:
    def test_singleton(self, capsys):
        assert main(["enumerate", "--sizes", "1,1,1", "--threads", "1"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2  # one record, one summary
        record = json.loads(lines[0])
        jsonschema.validate(record, schema("solution_record.schema.json"))
        summary = json.loads(lines[1])
        jsonschema.validate(summary, schema("enumerate_summary.schema.json"))

    def test_stream_contains_single_bit_triple(self, capsys):
        assert (
            main(
                [
                    "enumerate",
                    "--sizes",
                    "2,2,2",
                    "--constraints",
                    "correctness",
                    "--threads",
                    "1",
                ]
            )
            == 0
        )
        lines = capsys.readouterr().out.strip().splitlines()
        records = [json.loads(line) for line in lines[:-1]]
        assert {"encrypt": ["1001", "0110"]}.items() <= records[-1].items() or any(
            r["encrypt"] == ["1001", "0110"]
            and r["decrypt"] == [["10", "01"], ["01", "10"]]
            and r["pad"] == [0, 1]
            for r in records
        )

    def test_dedup_count_matches_golden(self, capsys):
        assert (
            main(
                [
                    "enumerate",
                    "--sizes",
                    "2,2,2",
                    "--constraints",
                    "correctness,S1",
                    "--dedup",
                    "--threads",
                    "1",
                ]
            )
            == 0
        )
        lines = capsys.readouterr().out.strip().splitlines()
        summary = json.loads(lines[-1])["summary"]
        assert summary["solutions"] == 4

    def test_budget_refusal(self, capsys):
        assert main(["enumerate", "--sizes", "3,3,3", "--threads", "1"]) == 2
        assert "budget" in capsys.readouterr().err

    def test_budget_override(self, capsys, monkeypatch):
        monkeypatch.setenv("RELCAT_BUDGET", "1")
        assert main(["enumerate", "--sizes", "1,1,1", "--threads", "1"]) == 2

    def test_bad_sizes_usage_error(self, capsys):
        assert main(["enumerate", "--sizes", "2,2", "--threads", "1"]) == 2

    def test_output_is_byte_deterministic(self, capsys):
        args = [
            "enumerate",
            "--sizes",
            "2,2,2",
            "--constraints",
            "correctness",
            "--threads",
            "1",
        ]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        second = capsys.readouterr().out
        assert first == second


class TestTheorems:
    def test_exhaustive(self, capsys):
        assert (
            main(
                [
                    "theorems",
                    "--sizes",
                    "2,2,2",
                    "--threads",
                    "1",
                    "--format",
                    "json",
                ]
            )
            == 0
        )
        payload = json.loads(capsys.readouterr().out)
        jsonschema.validate(payload, schema("theorem_report.schema.json"))
        assert payload["solutions"] == 8
        assert payload["counterexamples"] == []

    def test_sampled(self, capsys):
        assert (
            main(
                [
                    "theorems",
                    "--sizes",
                    "3,3,3",
                    "--samples",
                    "2000",
                    "--seed",
                    "3",
                    "--format",
                    "json",
                ]
            )
            == 0
        )
        payload = json.loads(capsys.readouterr().out)
        assert payload["sampled"] == 2000


class TestConsoleScript:
    def test_module_invocation(self):
        out = subprocess.run(
            [
                sys.executable,
                "-m",
                "relcat.cli",
                "check",
                spec("region_bubble.rcat"),
            ],
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0
        assert "EQUAL" in out.stdout
