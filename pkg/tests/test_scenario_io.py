import copy
import io
import json

import pytest

from sharesim.errors import DimensionMismatch, ScenarioSyntaxError, TypeMismatch, UnknownKey
from sharesim.scenario_io import (
    load_scenario,
    parse_scenario,
    run_scenario,
    scenario_to_dict,
    serialize_scenario,
    validate,
    write_trajectory,
)
from sharesim.environment import TrajectoryRecord

from conftest import scenario_path

EYE2 = [[1, 0], [0, 1]]


def minimal(**overrides):
    def layer():
        return {"weights": copy.deepcopy(EYE2), "bias": [0, 0]}

    doc = {
        "version": 1,
        "agents": {"a": {"classification": [layer()], "judgement": [layer()], "decision": [layer()]}},
        "environment": {"kind": "identity", "dim": 2},
        "run": {"steps": 1},
    }
    doc.update(overrides)
    return doc


def parse(d):
    return parse_scenario(json.dumps(d))


class TestParse:
    def test_defaults(self):
        doc = parse(minimal())
        name, spec = doc.agent_spec()
        assert name == "a"
        assert spec.self_index == 0 and spec.ability_index == 1 and spec.s_ref is None
        assert doc.run.tracked_stimuli == (0, 1) and doc.run.epsilon() == 1e-9
        assert doc.emotion_table is None and doc.perceived_environment is None
        assert validate(doc).ok

    def test_unknown_key_path(self):
        d = minimal()
        d["agents"]["a"]["judgement"][0] = {"wieghts": EYE2, "bias": [0, 0]}
        with pytest.raises(UnknownKey) as info:
            parse(d)
        assert info.value.path == "agents.a.judgement[0].wieghts"

    def test_syntax_error_position(self):
        with pytest.raises(ScenarioSyntaxError) as info:
            parse_scenario('{\n  "version": 1,\n  "agents": ]\n}')
        assert (info.value.line, info.value.col) == (3, 13)

    def test_nan_rejected(self):
        with pytest.raises(ScenarioSyntaxError):
            parse_scenario('{"version": NaN}')

    def test_overflow_rejected(self):
        d = json.dumps(minimal()).replace('"steps": 1', '"steps": 1, "sign_epsilon": 1e999')
        with pytest.raises(TypeMismatch):
            parse_scenario(d)

    @pytest.mark.parametrize("mutate, path", [
        (lambda d: d.update(version="1"), "version"),
        (lambda d: d["run"].update(steps=1.5), "run.steps"),
        (lambda d: d["agents"]["a"]["decision"][0].update(bias="0"), "agents.a.decision[0].bias"),
        (lambda d: d["environment"].update(kind="tabular"), "environment.kind"),
        (lambda d: d.pop("environment"), "environment"),
        (lambda d: d["agents"]["a"]["classification"][0].update(activation="softmax"),
         "agents.a.classification[0].activation"),
    ])
    def test_type_mismatch(self, mutate, path):
        d = minimal()
        mutate(d)
        with pytest.raises(TypeMismatch) as info:
            parse(d)
        assert info.value.path == path

    def test_version(self):
        with pytest.raises(TypeMismatch):
            parse(minimal(version=2))


class TestValidate:
    def test_bias_length_is_a_validation_error(self):
        d = minimal()
        d["agents"]["a"]["classification"][0]["bias"] = [0, 0, 0]
        doc = parse(d)
        report = validate(doc)
        assert not report.ok
        assert report.errors[0][0] == "agents.a.classification[0].bias"
        with pytest.raises(DimensionMismatch):
            run_scenario(doc)

    def test_judgement_dim(self):
        d = minimal()
        d["agents"]["a"]["judgement"] = [{"weights": [[1, 0, 0]], "bias": [0]}]
        paths = [p for p, _ in validate(parse(d)).errors]
        assert "agents.a.judgement" in paths

    def test_self_equals_ability(self):
        d = minimal()
        d["agents"]["a"]["ability_index"] = 0
        errors = validate(parse(d)).errors
        assert any("Agent invariant" in m for _, m in errors)

    def test_environment_fit(self):
        doc = parse(minimal(environment={"kind": "linear", "matrix": [[1, 0, 0]]}))
        paths = [p for p, _ in validate(doc).errors]
        assert paths == ["environment", "environment"]

    def test_reports_everything(self):
        d = minimal()
        d["agents"]["a"]["s_ref"] = [0]
        d["run"]["tracked_stimuli"] = [0, 5]
        d["run"]["initial_stimulus"] = [1]
        paths = {p for p, _ in validate(parse(d)).errors}
        assert {"agents.a.s_ref", "run.tracked_stimuli[1]", "run.initial_stimulus"} <= paths

    def test_bad_table_row(self):
        doc = parse(minimal(emotion_table=["Awe: [+,+]"]))
        assert [p for p, _ in validate(doc).errors] == ["emotion_table"]


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["apple.json", "dyad.json"])
    def test_fixed_point(self, name):
        doc = load_scenario(scenario_path(name))
        text = serialize_scenario(doc)
        again = parse_scenario(text)
        assert again == doc
        assert serialize_scenario(again) == text

    def test_optional_blocks(self):
        d = minimal(emotion_table=["Guilt: [-,any,any,any,any,any,any]"],
                    experiments={"prosocial": {"p": {"k": 0.5, "c_act": 1}}})
        d["run"].update(sign_epsilon=1e-6, rho_pairs=[[0, 1]])
        doc = parse(d)
        assert parse_scenario(serialize_scenario(doc)) == doc
        assert scenario_to_dict(doc)["run"]["sign_epsilon"] == 1e-6


def record(emotions=("Fear", "Disgust")):
    return TrajectoryRecord(0, (0.5, 0.0), (0.5, 0.0), (1.0 / 3.0,), (0.0,), emotions, None, None)


class TestWriteTrajectory:
    def test_empty(self):
        buf = io.BytesIO()
        n = write_trajectory([], buf)
        assert buf.getvalue() == b"t,s_tilde,s,v,a,emotions,surprise,reward\n" and n == len(buf.getvalue())

    def test_apple_rows(self, tmp_path):
        doc = load_scenario(scenario_path("apple.json"))
        out = tmp_path / "apple.csv"
        n = write_trajectory(run_scenario(doc), out)
        data = out.read_bytes()
        assert n == len(data) and b"\r" not in data
        lines = data.decode().splitlines()
        assert len(lines) == 5
        assert [line.split(",")[3] for line in lines[1:]] == ["100", "95.1", "80.4", "55.9"]

    def test_emotion_cell_and_precision(self):
        text = io.StringIO()
        write_trajectory([record()], text)
        header, row = text.getvalue().splitlines()
        assert header == "t,s_tilde_0,s_tilde_1,s_0,s_1,v_0,a_0,emotions,surprise,reward_0"
        assert row == "0,0.5,0,0.5,0,0.333333333,0,Fear;Disgust,,"
