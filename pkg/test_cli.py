"""
命令行测试：退出码与输出文件
"""

import json

from click.testing import CliRunner

from cli import EXIT_CONFIG, EXIT_FALSIFIED, EXIT_OK, EXIT_UNEXPECTED, cli, run_command
from utils.exceptions import FalsificationError


def _invoke(*args):
    return CliRunner().invoke(cli, list(args), obj={})


def test_rational_theta_is_rejected(tmp_path):
    result = _invoke('--out', str(tmp_path), 'construct', '--theta', '1/2', '--depth', '1')
    assert result.exit_code == EXIT_CONFIG
    assert 'badly approximable irrational' in result.output


def test_unknown_config_key(tmp_path):
    config = tmp_path / 'run.yaml'
    config.write_text('construction:\n  bogus: 1\n', encoding='utf-8')
    result = _invoke('--config', str(config), 'construct')
    assert result.exit_code == EXIT_CONFIG
    assert 'construction.bogus' in result.output


def test_bad_trim_mode(tmp_path):
    result = _invoke('--out', str(tmp_path), 'construct', '--trim', 'lots', '--depth', '1')
    assert result.exit_code == EXIT_CONFIG
    assert 'construction.trim' in result.output


def test_construct_then_verify(tmp_path):
    result = _invoke('--out', str(tmp_path), 'construct', '--depth', '2')
    assert result.exit_code == EXIT_OK, result.output
    for name in ('tree.jsonl', 'removals.csv', 'certificate.json', 'construct.log'):
        assert (tmp_path / name).exists()
    certificate = json.loads((tmp_path / 'certificate.json').read_text(encoding='utf-8'))
    assert certificate['sealed'] is True

    result = _invoke('--out', str(tmp_path), 'verify', '--certificate', str(tmp_path / 'certificate.json'),
                     '--Hmax', '256', '--Q', '200')
    assert result.exit_code == EXIT_OK, result.output
    assert (tmp_path / 'verification.json').exists()


def test_verify_needs_exactly_one_source(tmp_path):
    result = _invoke('--out', str(tmp_path), 'verify')
    assert result.exit_code == EXIT_CONFIG


def test_transfer(tmp_path):
    result = _invoke('--out', str(tmp_path), 'transfer', '--trials', '5', '--denominator', '6')
    assert result.exit_code == EXIT_OK, result.output
    record = json.loads((tmp_path / 'transfer.json').read_text(encoding='utf-8'))
    assert record['results'][0]['points'] == 5


def test_check_lemma1_small(tmp_path):
    result = _invoke('--out', str(tmp_path), 'check-lemma1', '--q-max', '40', '--n-max', '2', '--trials', '5')
    assert result.exit_code == EXIT_OK, result.output
    assert (tmp_path / 'lemma1.json').exists()


def test_falsification_exit_code(tmp_path, mocker):
    mocker.patch('cli.run_construction', side_effect=FalsificationError("伪造的反例", {'x': 1}))
    result = _invoke('--out', str(tmp_path), 'construct', '--depth', '1')
    assert result.exit_code == EXIT_FALSIFIED
    record = json.loads((tmp_path / 'falsification.json').read_text(encoding='utf-8'))
    assert record['witness'] == {'x': 1}


def test_unexpected_error_exit_code(tmp_path, mocker):
    mocker.patch('cli.run_construction', side_effect=RuntimeError('boom'))
    result = _invoke('--out', str(tmp_path), 'construct', '--depth', '1')
    assert result.exit_code == EXIT_UNEXPECTED


def test_run_command_returns_exit_codes(tmp_path):
    assert run_command(['--out', str(tmp_path), 'construct', '--theta', '1/2', '--depth', '1']) == EXIT_CONFIG
    assert run_command(['no-such-command']) == EXIT_CONFIG
    assert run_command(['--out', str(tmp_path), 'transfer', '--trials', '2', '--denominator', '3']) == EXIT_OK


def test_check_prop1(tmp_path):
    result = _invoke('--out', str(tmp_path), 'check-prop1', '--depth', '2')
    assert result.exit_code == EXIT_OK, result.output
    for line in (tmp_path / 'prop1.jsonl').read_text(encoding='utf-8').splitlines():
        found = json.loads(line)['L0']
        assert found is None or found['status'] != 'fallback'
