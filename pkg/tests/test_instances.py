import pytest

from src.commands import run
from src.documents import dumps, loads, read_problem
from src.errors import InputError
from src.instances import KINDS, random_problem
from src.verify import verify_documents

SEEDS = (0, 1, 2)


def roundtrip(document):
    return loads(dumps(document))


@pytest.mark.parametrize('mode', ['splittable', 'atomic'])
@pytest.mark.parametrize('seed', SEEDS)
@pytest.mark.parametrize('kind', KINDS)
def test_random_problems_verify(kind, seed, mode):
    command, document = random_problem(kind, seed=seed, mode=mode)
    document = roundtrip(document)
    report = run(command, read_problem(document))
    result = verify_documents(document, roundtrip(report))
    assert result['verified_command'] == command
    for check in report['checks']:
        assert check['deviation'] <= check['bound'] + 1e-9


@pytest.mark.parametrize('kind', ['partition', 'half-set', 'bang-bang', 'purify', 'annihilator'])
def test_random_problems_exact(kind):
    command, document = random_problem(kind, seed=5)
    report = run(command, read_problem(document, exact=True))
    assert report['parameters']['exact'] is True
    verify_documents(document, roundtrip(report))
    if 'deviation' in report['outputs']:
        assert report['outputs']['deviation'] <= report['outputs']['deviation_bound']


def test_generation_is_deterministic():
    assert dumps(random_problem('purify', seed=11)[1]) == dumps(random_problem('purify', seed=11)[1])
    assert dumps(random_problem('purify', seed=11)[1]) != dumps(random_problem('purify', seed=12)[1])


def test_annihilator_is_always_splittable():
    _, document = random_problem('annihilator', seed=0, mode='atomic')
    assert document['space']['mode'] == 'splittable'


def test_unknown_kind():
    with pytest.raises(InputError):
        random_problem('nope')
