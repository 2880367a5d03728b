from __future__ import annotations

import pytest

DISEASES = [
    "ovarian cancer",
    "anemia",
    "asthma",
    "familial adenomatous polyposis",
    "rheumatoid arthritis",
    "sepsis",
    "colorectal cancer",
    "hearing loss",
    "autoimmune disorders",
    "hemorrhagic cystitis",
]


def make_ner_files(root, n_entities=10, test_sentences=8):
    """Tiny gold NER corpus: one train sentence per seed entity."""
    root.mkdir(parents=True, exist_ok=True)
    blocks = []
    for name in DISEASES[:n_entities]:
        words = name.split()
        rows = ["Patients\tO", "with\tO"]
        rows.append(f"{words[0]}\tB-Disease")
        rows.extend(f"{w}\tI-Disease" for w in words[1:])
        rows.extend(["were\tO", "treated\tO", "promptly\tO", ".\tO"])
        blocks.append("\n".join(rows))
    (root / "train.conll").write_text("\n\n".join(blocks) + "\n", encoding="utf-8")

    test_blocks = []
    for i, name in enumerate(DISEASES[:test_sentences]):
        words = name.split()
        rows = [f"Case\tO", f"{i}\tO", "involved\tO"]
        rows.append(f"{words[0]}\tB-Disease")
        rows.extend(f"{w}\tI-Disease" for w in words[1:])
        rows.append(".\tO")
        test_blocks.append("\n".join(rows))
    (root / "test.conll").write_text("\n\n".join(test_blocks) + "\n", encoding="utf-8")

    (root / "ner.manifest").write_text(
        "name: toy-disease\n"
        "task: NER\n"
        "train: train.conll\n"
        "test: test.conll\n"
        "entity-types: Disease\n",
        encoding="utf-8",
    )
    return root / "ner.manifest"


def make_re_files(root, pool=10, test_examples=10):
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(pool):
        rows.append(f"| The @GENE$ variant {i} increases @DISEASE$ risk markedly. | Yes |")
        rows.append(f"| No link between @GENE$ marker {i} and @DISEASE$ was found. | No |")
    (root / "seed.txt").write_text("\n".join(rows) + "\n", encoding="utf-8")

    test_rows = []
    for i in range(test_examples):
        label = "Yes" if i % 2 == 0 else "No"
        if label == "Yes":
            sentence = f"Expression of @GENE$ correlates with @DISEASE$ severity in cohort {i}."
        else:
            sentence = f"Genotype @GENE$ showed no association with @DISEASE$ in study {i}."
        test_rows.append(f"{sentence}\t{label}")
    (root / "test.tsv").write_text("\n".join(test_rows) + "\n", encoding="utf-8")

    (root / "re.manifest").write_text(
        "name: toy-gad\n"
        "task: RE\n"
        "seed-pool: seed.txt\n"
        "test: test.tsv\n"
        "entity-types: Gene, Disease\n",
        encoding="utf-8",
    )
    return root / "re.manifest"


def write_config(path, manifest, out_dir, extra=""):
    path.write_text(
        "[run]\n"
        f"manifest: {manifest}\n"
        f"out_dir: {out_dir}\n"
        "rng_seed: 7\n"
        "\n"
        "[provider]\n"
        "kind: mock\n"
        "mock_seed: 11\n"
        + extra,
        encoding="utf-8",
    )
    return path


@pytest.fixture
def ner_workspace(tmp_path):
    manifest = make_ner_files(tmp_path / "data")
    out_dir = tmp_path / "out"
    config = write_config(
        tmp_path / "run.cfg",
        manifest,
        out_dir,
        extra="\n[generation]\nn_per_entity: 6\nmax_entities: 4\n\n[gate]\nmin_tokens: 3\n",
    )
    return {"root": tmp_path, "manifest": manifest, "config": config, "out": out_dir}


@pytest.fixture
def re_workspace(tmp_path):
    manifest = make_re_files(tmp_path / "data")
    out_dir = tmp_path / "out"
    config = write_config(
        tmp_path / "run.cfg",
        manifest,
        out_dir,
        extra="\n[generation]\ntarget_size: 12\n\n[gate]\nmin_tokens: 3\n",
    )
    return {"root": tmp_path, "manifest": manifest, "config": config, "out": out_dir}
