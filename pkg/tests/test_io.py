import json
import shutil

import pytest

from feedback_mediator.core import SurveyItem, SurveyItemMap
from feedback_mediator.io import (
    DataError,
    DatasetPaths,
    RunManifest,
    load_bundle,
    load_channels,
    load_dataset,
    load_item_map,
    load_profiles,
    read_csv,
    sha256_file,
    write_dataset,
)
from feedback_mediator.simulate import CohortSpec, generate_cohort


def minimal_dir(tmp_path):
    d = tmp_path / "mini"
    d.mkdir()
    (d / "graph.json").write_text(json.dumps({
        "topics": [{"id": "T1", "name": "one"}, {"id": "T2", "name": "two"}],
        "prerequisites": [["T1", "T2"]],
    }))
    (d / "item_map.json").write_text(json.dumps({"items": [
        {"item_id": "Q5_T1", "construct": "Q5_topic", "topic": "T1", "scale_min": 1, "scale_max": 6},
    ]}))
    (d / "questions.csv").write_text("learner_id,topic_id,label,week\na,T1,incorrect,1\nb,T2,correct,2\n")
    (d / "survey.csv").write_text("learner_id,item_id,value\na,Q5_T1,5\nc,Q5_T1,6\n")
    (d / "segments.csv").write_text("segment_id,theme\ns1,usability-friction\n")
    return d


def test_minimal_fixture(tmp_path):
    data = load_dataset(DatasetPaths.from_dir(minimal_dir(tmp_path)))
    assert len(data.graph.topics) == 2 and data.learners == {"a", "b", "c"}
    assert data.weeks == (1, 2)
    assert data.teacher_segments[0].is_friction


def test_item_map_json_matches_format(tmp_path):
    m = load_item_map(minimal_dir(tmp_path) / "item_map.json")
    assert m == SurveyItemMap({"Q5_T1": SurveyItem("Q5_T1", "Q5_topic", "T1", 1, 6)})


def test_survey_seven_names_row(tmp_path):
    d = minimal_dir(tmp_path)
    (d / "survey.csv").write_text("learner_id,item_id,value\na,Q5_T1,5\nc,Q5_T1,7\n")
    with pytest.raises(DataError, match=r"likert-out-of-range.*survey\.csv:3"):
        load_dataset(DatasetPaths.from_dir(d))


def test_unknown_topic_is_referential_error(tmp_path):
    d = minimal_dir(tmp_path)
    (d / "questions.csv").write_text("learner_id,topic_id,label,week\na,T9,incorrect,1\n")
    with pytest.raises(DataError, match=r"dangling-topic.*questions\.csv:2"):
        load_dataset(DatasetPaths.from_dir(d))


def test_header_must_match_exactly(tmp_path):
    d = minimal_dir(tmp_path)
    (d / "questions.csv").write_text("learner,topic_id,label,week\na,T1,incorrect,1\n")
    with pytest.raises(DataError, match="header"):
        load_dataset(DatasetPaths.from_dir(d))


def test_parse_errors_have_locators(tmp_path):
    d = minimal_dir(tmp_path)
    (d / "questions.csv").write_text("learner_id,topic_id,label,week\na,T1,incorrect,one\n")
    with pytest.raises(DataError, match=r"questions\.csv:2"):
        load_dataset(DatasetPaths.from_dir(d))
    (d / "questions.csv").write_text("learner_id,topic_id,label,week\na,T1,incorrect\n")
    with pytest.raises(DataError, match=r"questions\.csv:2"):
        load_dataset(DatasetPaths.from_dir(d))
    (d / "graph.json").write_text("{not json")
    with pytest.raises(DataError, match=r"graph\.json:1"):
        load_dataset(DatasetPaths.from_dir(d))


def test_missing_graph(tmp_path):
    d = minimal_dir(tmp_path)
    (d / "graph.json").unlink()
    with pytest.raises(DataError, match="no graph"):
        load_dataset(DatasetPaths.from_dir(d))


def test_round_trip(tmp_path):
    cohort = generate_cohort(CohortSpec(n_learners=40, n_topics=8, planted_isolated=1, survey_topics=4,
                                        n_segments=10, friction_segments=2), seed=3)
    paths = write_dataset(cohort.data, tmp_path / "rt", cohort.item_map, cohort.codebook)
    again = load_dataset(paths)
    assert again == cohort.data
    # second generation of files is byte-identical
    paths2 = write_dataset(again, tmp_path / "rt2", load_item_map(paths.item_map), cohort.codebook)
    for name in ("graph.json", "questions.csv", "survey.csv", "help_events.csv", "segments.csv", "item_map.json"):
        assert (tmp_path / "rt" / name).read_bytes() == (tmp_path / "rt2" / name).read_bytes()
    assert paths2.present()


def test_bundle_side_files(fixtures_dir):
    b = load_bundle(DatasetPaths.from_dir(fixtures_dir / "synthetic"))
    assert len(b.difficulty_weeks) == 279 and len(b.concerns) == 54
    assert all(ws for ws in b.difficulty_weeks.values())


def test_channels_loader(fixtures_dir, tmp_path):
    ch = load_channels(fixtures_dir / "channel_reference" / "channels.csv")
    assert ch == {"case_a": (0.31, 0.70, 0.52), "baseline_flagged": (0.90, 0.20, 0.15)}
    bad = tmp_path / "channels.csv"
    bad.write_text("learner_id,rho_raw,rho_help,rho_refl\nx,1.2,0,0\n")
    with pytest.raises(DataError, match="channels.csv:2"):
        load_channels(bad)


def test_profiles_loader(fixtures_dir, tmp_path):
    ps = load_profiles(fixtures_dir / "weight_profiles.json")
    assert [(p.name, p.w_r, p.w_d, p.w_f) for p in ps] == [
        ("default", 0.7, 0.2, 0.1), ("higher-disagreement", 0.6, 0.4, 0.0)]
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"profiles": [{"name": "x", "w_r": 7, "w_d": 2, "w_f": 1}]}))
    with pytest.raises(Exception, match="renormalize"):
        load_profiles(p)
    assert load_profiles(p, renormalize=True)[0].w_r == pytest.approx(0.7)


def test_manifest_digest_tracks_bytes(tmp_path):
    f = tmp_path / "in.csv"
    f.write_text("a\n")
    d1 = sha256_file(f)
    assert d1 == sha256_file(f)
    f.write_text("b\n")
    d2 = sha256_file(f)
    assert d1 != d2
    m = RunManifest.build("mediate", [f, f], {"seed": 1})
    assert m.inputs == ((str(f), d2),)
    doc = m.as_dict()
    assert doc["command"] == "mediate" and doc["config"] == {"seed": 1} and doc["timestamp"].endswith("+00:00")


def test_dataset_mapping(tmp_path):
    d = minimal_dir(tmp_path)
    shutil.copy(d / "survey.csv", tmp_path / "alt_survey.csv")
    paths = DatasetPaths.from_mapping({"dir": "mini", "survey": "alt_survey.csv"}, tmp_path)
    assert paths.survey == tmp_path / "alt_survey.csv" and paths.graph == d / "graph.json"
    with pytest.raises(DataError, match="unknown dataset keys"):
        DatasetPaths.from_mapping({"nope": "x"}, tmp_path)


def test_read_csv_locators(tmp_path):
    f = tmp_path / "segments.csv"
    f.write_text("segment_id,theme\ns1,a\ns2,b\n")
    rows = read_csv(f, "segments")
    assert [loc for loc, _ in rows] == [f"{f}:2", f"{f}:3"]
