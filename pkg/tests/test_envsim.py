import json

import pytest

from blade_rec.envsim import (Catalog, DatasetFormatError, DatasetVersionError,
                              UserContext, dumps_dataset, generate_catalog,
                              generate_contexts, generate_dataset,
                              load_dataset, loads_dataset, save_dataset)


def test_catalog_deterministic():
    assert generate_catalog(7, 50, 5, 2) == generate_catalog(7, 50, 5, 2)


def test_catalog_genre_range():
    catalog = generate_catalog(7, 50, 5, 2)
    for item_genres in catalog.genres:
        assert 1 <= len(item_genres) <= 2
        assert all(0 <= g < 5 for g in item_genres)
        assert list(item_genres) == sorted(set(item_genres))


def test_catalog_seed_changes_genres():
    assert generate_catalog(7, 50, 5, 2).genres != \
        generate_catalog(8, 50, 5, 2).genres


@pytest.mark.parametrize("sizes", [(1, 5, 2), (10, 0, 1), (10, 3, 0),
                                   (10, 3, 4)])
def test_catalog_invalid_sizes(sizes):
    with pytest.raises(ValueError):
        generate_catalog(0, *sizes)


def test_catalog_validates_genres():
    with pytest.raises(ValueError):
        Catalog(n_items=2, n_genres=2, genres=((0,), ()))
    with pytest.raises(ValueError):
        Catalog(n_items=2, n_genres=2, genres=((0,), (2,)))


def test_context_validation():
    with pytest.raises(ValueError):
        UserContext(id=0, history=(1, 2), targets=())
    with pytest.raises(ValueError):
        UserContext(id=0, history=(1, 2), targets=(2, 3))


def test_contexts_window_sizes():
    catalog = generate_catalog(7, 50, 5, 2)
    ds = generate_contexts(catalog, 1, n_contexts=10, history_len=10,
                           target_len=10)
    assert len(ds) == 10
    for ctx in ds.contexts:
        assert len(ctx.history) == 10
        assert len(ctx.targets) == 10
        assert not set(ctx.history) & set(ctx.targets)
        assert len(set(ctx.history + ctx.targets)) == 20


def test_contexts_capacity_violation():
    catalog = generate_catalog(7, 20, 5, 2)
    with pytest.raises(ValueError):
        generate_contexts(catalog, 1, n_contexts=3, history_len=10,
                          target_len=11)


def test_contexts_differ():
    ds = generate_dataset(4)
    assert len({ctx.targets for ctx in ds.contexts}) > 1


def test_dataset_deterministic():
    assert generate_dataset(9) == generate_dataset(9)
    assert dumps_dataset(generate_dataset(9)) == \
        dumps_dataset(generate_dataset(9))
    assert generate_dataset(9).seed == 9


def test_latent_pref_kept_in_memory_only():
    ds = generate_dataset(2, n_genres=4)
    assert all(len(ctx.latent_pref) == 4 for ctx in ds.contexts)
    assert "latent_pref" not in dumps_dataset(ds)
    loaded = loads_dataset(dumps_dataset(ds))
    assert all(ctx.latent_pref is None for ctx in loaded.contexts)
    assert loaded == ds


def test_save_load_round_trip(tmp_path, tiny_dataset):
    path = str(tmp_path / "ds.jsonl")
    save_dataset(tiny_dataset, path)
    assert load_dataset(path) == tiny_dataset


def test_empty_contexts_round_trip(tmp_path):
    ds = generate_dataset(1, n_contexts=0)
    path = str(tmp_path / "empty.jsonl")
    save_dataset(ds, path)
    loaded = load_dataset(path)
    assert len(loaded) == 0
    assert loaded.catalog == ds.catalog


def test_missing_targets_names_line(tiny_dataset):
    lines = dumps_dataset(tiny_dataset).splitlines()
    record = json.loads(lines[2])
    del record["targets"]
    lines[2] = json.dumps(record)
    with pytest.raises(DatasetFormatError) as exc:
        loads_dataset("\n".join(lines))
    assert exc.value.lineno == 3
    assert "line 3" in str(exc.value)
    assert "targets" in str(exc.value)


def test_invalid_json_names_line(tiny_dataset):
    text = dumps_dataset(tiny_dataset) + "{not json\n"
    with pytest.raises(DatasetFormatError) as exc:
        loads_dataset(text)
    assert exc.value.lineno == len(tiny_dataset) + 2


def test_unknown_version(tiny_dataset):
    lines = dumps_dataset(tiny_dataset).splitlines()
    header = json.loads(lines[0])
    header["version"] = 99
    lines[0] = json.dumps(header)
    with pytest.raises(DatasetVersionError):
        loads_dataset("\n".join(lines))


def test_item_out_of_catalog(tiny_dataset):
    lines = dumps_dataset(tiny_dataset).splitlines()
    record = json.loads(lines[1])
    record["targets"] = [999]
    lines[1] = json.dumps(record)
    with pytest.raises(DatasetFormatError):
        loads_dataset("\n".join(lines))


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(str(tmp_path / "nope.jsonl"))


@pytest.mark.parametrize("shift,lineno", [(10, 2), (1, 2)])
def test_context_id_must_match_position(tiny_dataset, shift, lineno):
    lines = dumps_dataset(tiny_dataset).splitlines()
    for i in range(1, len(lines)):
        record = json.loads(lines[i])
        record["id"] += shift
        lines[i] = json.dumps(record)
    with pytest.raises(DatasetFormatError) as exc:
        loads_dataset("\n".join(lines))
    assert exc.value.lineno == lineno
    assert "position 0" in str(exc.value)


def test_context_id_gap_names_line(tiny_dataset):
    lines = dumps_dataset(tiny_dataset).splitlines()
    record = json.loads(lines[3])
    record["id"] = 7
    lines[3] = json.dumps(record)
    with pytest.raises(DatasetFormatError) as exc:
        loads_dataset("\n".join(lines))
    assert exc.value.lineno == 4
