from miniMPEG.MiniMPEGException import MiniMPEGException


class UtilityException(MiniMPEGException):
    pass

class FileException(UtilityException):
    pass


class KeywordNotAllowed(UtilityException):
    exit_code = 3

    def __init__(self, *keywords: str, variables: dict, func_name: str):
        """
        :param keywords: all the keywords that the keywords_check function marked as not allowed
        :param variables: values relevant for the failed check
        :param func_name: function (or config section) from where the keywords_check was called
        """
        self._message = f'\nThe keyword(s) "{", ".join(sorted(keywords))}" is (are) not allowed for "{func_name}".'
        self.description = (f'\nCheck for typos in the keyword. The allowed keywords of each configuration section are\n'
                            f'listed in the README and in the dataclasses of miniMPEG/Config.py.')
        super().__init__(variables)


class ValueOutOfRange(UtilityException):
    exit_code = 3

    def __init__(self, name: str, value: object, expected: str, variables: dict):
        self._message = f'\nThe value of "{name}" is out of range: {value!r}. Expected {expected}.'
        self.description = ''
        super().__init__(variables)


class UnknownFileTest(FileException):
    def __init__(self, test_name: str, variables: dict):
        self._message = f'\nFile has no precondition named "{test_name}".'
        self.description = (f'\nNew preconditions must be registered in File._tests '
                            f'before _test_for can dispatch to them.')
        super().__init__(variables)


class FileNotBound(FileException):
    def __init__(self, variables: dict):
        self._message = f'\nNo file is bound to this File object yet.'
        self.description = f'\nCall .bind() with a file name (relative to the calling module) or an absolute path first.'
        super().__init__(variables)


class BoundFileMissing(FileException):
    def __init__(self, file_name: str, variables: dict):
        self._message = f'\nThe file "{file_name}" does not exist.'
        self.description = (f'\nThe file was bound with create=False, so it has to exist before it is read. Template and\n'
                            f'data files are shipped with the package; a missing one means a broken installation.')
        super().__init__(variables)


class SplitterInText(FileException):
    def __init__(self, text: str, splitter: str, variables: dict):
        self._message = f'\nA splitter {splitter!r} was found in text {text[:80]!r}.'
        self.description = (f'\nYou must avoid embedding splitters in the text that is appended as one item, because\n'
                            f'the class will treat your text as two separate items when reading it back.')
        super().__init__(variables)
