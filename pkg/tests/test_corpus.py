from orgnet import corpus
from orgnet.contingency import build_lp, expected_columns
from orgnet.documents import parse_problem


def test_corpus_size_and_names():
    items = corpus.corpus()
    names = [n for n, _ in items]
    assert len(items) == corpus.CORPUS_SIZE >= 50
    assert len(set(names)) == len(names)


def test_corpus_is_deterministic():
    assert corpus.corpus() == corpus.corpus()


def test_write_corpus(tmp_path):
    paths = corpus.write_corpus(tmp_path / "c")
    assert len(paths) == corpus.CORPUS_SIZE
    assert parse_problem(paths[0].read_text()).problem == corpus.corpus()[0][1]


def test_corpus_main(tmp_path, capsys):
    assert corpus.main([str(tmp_path)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == corpus.CORPUS_SIZE


def test_scale_problem_dimensions():
    p = corpus.scale_problem()
    model, _ = build_lp(p)
    assert model.n_vars == expected_columns(p) >= 10_000
    assert model.n_constraints >= 10_000
