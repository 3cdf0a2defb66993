import os
import shutil
import sys
import tempfile
from pathlib import Path

# With REVPROMPT_EXTENSION_DIR set (the ctest run), assemble the package from
# the source tree plus the freshly built extension; otherwise use the
# installed one.
_ext_dir = os.environ.get("REVPROMPT_EXTENSION_DIR")
if _ext_dir:
    staging = Path(tempfile.mkdtemp(prefix="revprompt_py_"))
    pkg = staging / "revprompt"
    shutil.copytree(Path(__file__).resolve().parents[1] / "revprompt", pkg)
    for so in Path(_ext_dir).glob("_revprompt*"):
        shutil.copy2(so, pkg / so.name)
    sys.path.insert(0, str(staging))
