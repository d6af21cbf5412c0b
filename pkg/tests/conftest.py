import contextlib

import pytest

# criterion number -> one-line verdict, filled by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}


class Checks(list):
    def add(self, name: str, ok: bool, detail: str = "") -> bool:
        self.append((name, bool(ok), detail))
        return bool(ok)


@pytest.fixture
def criterion():
    @contextlib.contextmanager
    def _run(number: int, title: str):
        checks = Checks()
        error = None
        try:
            yield checks
        except Exception as exc:  # recorded as FAIL, then re-raised
            error = exc
            raise
        finally:
            failed = [c for c in checks if not c[1]]
            ok = error is None and not failed and bool(checks)
            if error is not None:
                detail = f"error: {type(error).__name__}: {error}"
            elif failed:
                detail = "; ".join(f"{n} ({d})" for n, _, d in failed)
            else:
                detail = "; ".join(f"{n} {d}".strip() for n, _, d in checks)
            line = f"CRITERION {number:>2} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
            ACCEPTANCE_LINES[number] = line
            print(line)
        assert not failed, line

    return _run


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
