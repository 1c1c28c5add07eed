"""
This class is defined to handle simple operations on small text files: prompt templates, the category list, the corpus
manifest, run records and checkpoint logs.
NOTE: the files should not be large, because the program loads all the content of a file at once.

A File is bound either next to a .py file (pass its __file__ as the caller and a relative name to .bind()) or to an
absolute path. Items of the file are separated by the splitter (a new line by default); lines starting with '#' are
comments and are skipped by .read_all().

Writes that replace the whole content go through .write_atomic(): the text is written to a temporary file in the same
directory which then replaces the bound file, so a reader never sees a half-written manifest.

NOTE: before working with the file, it is necessary to call .bind() method to either create a file or to connect to it.
"""


from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path
from typing import List, Any

from miniMPEG.Utilities.UtilityExceptions import UnknownFileTest, FileNotBound, SplitterInText, BoundFileMissing


class File:
    # ==================================================================================================== MAGIC METHODS

    def __init__(self, caller: str | Path = __file__, splitter: str = '\n') -> None:
        """
        :param caller: The __file__ variable of the .py file next to which the text file is looked for. Ignored when
        .bind() receives an absolute path.
        :param splitter: The string that is used to separate several items in the file. New line symbol by default.
        """

        self._caller = Path(caller)
        self._caller_dir = self._caller.resolve().parent
        self._file: Path | None = None
        self._splitter = splitter

        self._tests = {
            "file bound": self._file_bound_test,
            "file exists": self._file_exists_test,
            "splitter test": self._no_splitter_test,
        }

    def __iter__(self):
        return self.read_all().__iter__()

    def __str__(self):
        return self.read_text()


    # =================================================================================================== METHOD TESTING
    def _test_for(self, tests: List[str], **kwargs: Any) -> bool:
        results = list()
        for test in tests:
            try:
                res = self._tests[test](**kwargs)
            except KeyError:
                raise UnknownFileTest(test_name=test, variables={'tests': tests})
            results.append(res)
        return all(results)

    def _file_bound_test(self, **kwargs: Any) -> bool:
        if self._file is None:
            raise FileNotBound(variables={'caller': str(self._caller)})
        return True

    def _file_exists_test(self, **kwargs: Any) -> bool:
        if not self._file.exists():
            raise BoundFileMissing(file_name=str(self._file), variables={'caller': str(self._caller)})
        return True

    def _no_splitter_test(self, *, text: str = '', **kwargs: Any) -> bool:
        if self._splitter in text:
            raise SplitterInText(text=text, splitter=self._splitter, variables={'file': str(self._file)})
        return True


    # =================================================================================================== PUBLIC METHODS
    def bind(self, file_name: str | Path, create: bool = False) -> File:
        """
        Links the instance to a file. A relative name is resolved against the caller's directory, an absolute one is
        used as is. With create=True a missing file (and its parent directories) is created empty.

        :param file_name: name of the file, including extension
        :param create: True if a missing file should be created
        :return: the instance itself, so that File(__file__).bind('x.txt').read_text() reads in one line
        """

        path = Path(file_name)
        if not path.is_absolute():
            path = self._caller_dir / path

        if create and not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            path.touch()

        self._file = path
        return self

    def read_text(self) -> str:
        self._test_for(['file bound', 'file exists'])
        return self._file.read_text(encoding='utf-8')

    def read_all(self) -> List[str]:
        """Returns the items of the file, skipping empty items and '#' comment lines."""

        content = self.read_text().strip(self._splitter)
        if not content:
            return list()

        return [item for item in content.split(self._splitter)
                if item.strip() and not item.lstrip().startswith('#')]

    def write_atomic(self, text: str) -> None:
        """Replaces the content of the bound file in one step (temporary file + os.replace)."""

        self._test_for(['file bound'])
        self._file.parent.mkdir(parents=True, exist_ok=True)

        fd, tmp_name = tempfile.mkstemp(prefix=f'.{self._file.name}.', dir=str(self._file.parent))
        try:
            with os.fdopen(fd, 'w', encoding='utf-8', newline='') as tmp:
                tmp.write(text)
                tmp.flush()
                os.fsync(tmp.fileno())
            os.replace(tmp_name, self._file)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

    def write_bytes_atomic(self, data: bytes) -> None:
        self._test_for(['file bound'])
        self._file.parent.mkdir(parents=True, exist_ok=True)

        fd, tmp_name = tempfile.mkstemp(prefix=f'.{self._file.name}.', dir=str(self._file.parent))
        try:
            with os.fdopen(fd, 'wb') as tmp:
                tmp.write(data)
                tmp.flush()
                os.fsync(tmp.fileno())
            os.replace(tmp_name, self._file)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

    def append(self, text: str, add_splitter: bool = True) -> None:
        """Appends one item to the file. The item itself must not contain the splitter."""

        self._test_for(['file bound', 'splitter test'], text=text)
        self._file.parent.mkdir(parents=True, exist_ok=True)
        with self._file.open('a', encoding='utf-8') as file:
            file.write(text + (self._splitter if add_splitter else ''))
            file.flush()

    def digest(self) -> str:
        """SHA-256 of the raw bytes of the file."""

        self._test_for(['file bound', 'file exists'])
        return hashlib.sha256(self._file.read_bytes()).hexdigest()

    def delete(self) -> None:
        self._test_for(['file bound'])
        if self._file.exists():
            self._file.unlink()


    # ======================================================================================================= PROPERTIES
    @property
    def splitter(self) -> str:
        return self._splitter

    @property
    def exists(self) -> bool:
        return self._file is not None and self._file.exists()

    @property
    def caller_directory(self) -> Path:
        return self._caller_dir

    @property
    def name(self) -> str:
        self._test_for(['file bound'])
        return self._file.name

    @property
    def path(self) -> Path:
        self._test_for(['file bound'])
        return self._file
