import subprocess
import sys

import pytest

from support import compile_lines, image_with_boot
from xsm.disk import DiskImage
from xsm.sim import main


def xsm(*args, input_text=None):
    return subprocess.run([sys.executable, "-m", "xsm.sim", *map(str, args)], capture_output=True, text=True,
                          input=input_text)


@pytest.fixture
def image(tmp_path):
    def make(source=None, lines=None):
        path = tmp_path / "disk.xfs"
        image_with_boot(path, lines if lines is not None else compile_lines(source))
        return path
    return make


def test_hello_world(image):
    r = xsm("--disk", image('R0 = "hello world"; print R0; halt;'))
    assert r.returncode == 0
    assert r.stdout == "hello world\n"


def test_empty_image_faults_at_first_instruction(image):
    r = xsm("--disk", image(lines=[]))
    assert r.returncode == 1
    assert "tick 1" in r.stderr and "512" in r.stderr


def test_tick_limit(image):
    r = xsm("--disk", image("while (1) do endwhile;"), "--max-ticks", 1000)
    assert r.returncode == 3
    assert "tick limit 1000" in r.stderr


@pytest.mark.parametrize("flags", [["--cores", "3"], ["--timer", "0"], ["--disk-latency", "-1"], ["--debug-script", "x"]])
def test_usage_errors(image, flags):
    assert xsm("--disk", image("halt;"), *flags).returncode == 2


def test_missing_disk(tmp_path):
    assert xsm("--disk", tmp_path / "none.xfs").returncode == 2
    assert xsm().returncode == 2


def test_halt_writes_disk_back(image):
    path = image("[20 * 512] = \"saved\"; storei(300, 20); halt;")
    assert main(["--disk", str(path)]) == 0
    assert DiskImage.load(path).words[300 * 512] == "saved"


def test_fault_leaves_disk_untouched(image):
    path = image("[20 * 512] = \"saved\"; storei(300, 20); R0 = 1 / 0;")
    before = path.read_bytes()
    assert main(["--disk", str(path)]) == 1
    assert path.read_bytes() == before


def test_console_input_script(image, tmp_path):
    script = tmp_path / "input.txt"
    script.write_text("first\nsecond\n")
    r = xsm("--disk", image("ini R0; ini R1; print R1; print R0; halt;"), "--input", script)
    assert r.stdout == "second\nfirst\n"


def test_trace_and_transcript_files(image, tmp_path):
    trace, transcript = tmp_path / "trace.txt", tmp_path / "out.txt"
    r = xsm("--disk", image('print "x"; halt;'), "--trace", trace, "--transcript", transcript)
    assert r.returncode == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == '1\t0\tkernel\t512\tMOV R16, "x"'
    assert lines[-1] == "3\t0\tkernel\t516\tHALT"
    assert transcript.read_text() == "x\n"


def test_two_cores_flag(image):
    r = xsm("--disk", image("start 600; halt;"), "--cores", 2)
    assert r.returncode == 1  # core 1 runs into empty memory at 600
    r = xsm("--disk", image("start 600; halt;"))
    assert r.returncode == 1 and "START needs the two-core machine" in r.stderr
