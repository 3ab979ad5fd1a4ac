"""Acceptance criterion 8: the neural provider passes phrasemeter's
provider-check end to end — subprocess launch, handshake, deterministic
condprob and embedding probes — against a real (tiny) transformer
checkpoint."""

from pathlib import Path

from phrasemeter import cli

FIXTURE = Path(__file__).parent / "fixtures" / "tiny-mlm"


def test_criterion_8_provider_check(capsys):
    descriptor = f"subprocess:neural-provider serve --model {FIXTURE}"
    try:
        code = cli.main(["provider-check", "--provider", descriptor,
                         "--probe-tokens", "the cat sat on the mat"])
        out = capsys.readouterr().out
        assert code == cli.EXIT_OK, out
        assert "provider-check: ok" in out
        assert "dimension=32" in out
    except BaseException:
        print("\n[criterion 8] FAIL: neural provider failed provider-check")
        raise
    print("\n[criterion 8] PASS: neural provider passes provider-check "
          "against a transformer checkpoint")
