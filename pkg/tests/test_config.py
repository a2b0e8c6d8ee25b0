import pytest

from tcmeval.config import RunConfig, load_config
from tcmeval.errors import ConfigError


def test_no_path_gives_full_defaults():
    config = load_config(None)
    assert config.thresholds.kto_true == 0.90
    assert config.thresholds.kto_false == 0.60
    assert config.thresholds.rejection == 8.5
    assert config.chunk_max_tokens == 512
    assert config.top_k == 3
    assert config.weights.similarity == 50


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("", encoding="utf-8")
    config = load_config(path)
    assert config.thresholds.rejection == 8.5
    assert config.judges == []


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_threshold_inversion_rejected(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("thresholds:\n  kto_true: 0.5\n  kto_false: 0.6\n",
                    encoding="utf-8")
    with pytest.raises(ConfigError) as exc_info:
        load_config(path)
    assert "kto_true" in str(exc_info.value)


def test_top_k_override_and_validation(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("top_k: 5\n", encoding="utf-8")
    assert load_config(path).top_k == 5
    path.write_text("top_k: 0\n", encoding="utf-8")
    with pytest.raises(ConfigError) as exc_info:
        load_config(path)
    assert "top_k" in str(exc_info.value)


def test_judge_blocks_parse(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(
        "judges:\n"
        "  - name: judge-a\n"
        "    endpoint: http://localhost:1/v1/chat/completions\n"
        "    schema_mode: structured-output\n"
        "    max_in_flight: 2\n"
        "  - name: judge-b\n"
        "    endpoint: http://localhost:2/v1/chat/completions\n",
        encoding="utf-8",
    )
    config = load_config(path)
    assert [j.name for j in config.judges] == ["judge-a", "judge-b"]
    assert config.judges[0].schema_mode == "structured-output"
    assert config.judges[1].schema_mode == "prompt-embedded"


def test_duplicate_judge_names_rejected(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(
        "judges:\n"
        "  - {name: same, endpoint: http://a}\n"
        "  - {name: same, endpoint: http://b}\n",
        encoding="utf-8",
    )
    with pytest.raises(ConfigError):
        load_config(path)


def test_judge_block_missing_endpoint(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("judges:\n  - {name: lonely}\n", encoding="utf-8")
    with pytest.raises(ConfigError) as exc_info:
        load_config(path)
    assert "judges[0]" in str(exc_info.value)


def test_bad_weights_named(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("weights:\n  similarity: 80\n", encoding="utf-8")
    with pytest.raises(ConfigError) as exc_info:
        load_config(path)
    assert "weights" in str(exc_info.value)


def test_save_load_round_trip(tmp_path):
    path = tmp_path / "config.yaml"
    original = load_config(None)
    original.top_k = 4
    original.chunk_max_tokens = 256
    original.save(path)
    reloaded = load_config(path)
    assert reloaded.to_dict() == original.to_dict()


def test_load_is_pure(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("top_k: 2\n", encoding="utf-8")
    a = load_config(path)
    b = load_config(path)
    assert a.to_dict() == b.to_dict()
