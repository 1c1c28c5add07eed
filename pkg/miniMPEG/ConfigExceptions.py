from miniMPEG.MiniMPEGException import MiniMPEGException


class ConfigException(MiniMPEGException):
    exit_code = 3


class ConfigFileMissing(ConfigException):
    def __init__(self, path: str, variables: dict):
        self._message = f'\nThe configuration file "{path}" does not exist.'
        self.description = f'\nPass an existing YAML file with --config, or leave the option out to use the defaults.'
        super().__init__(variables)


class ConfigSyntaxError(ConfigException):
    def __init__(self, path: str, reason: str, variables: dict):
        self._message = f'\nThe configuration file "{path}" is not valid YAML: {reason}.'
        self.description = ''
        super().__init__(variables)


class InvalidConfigValue(ConfigException):
    def __init__(self, key: str, value: object, reason: str, variables: dict):
        self._message = f'\nThe configuration value "{key}" = {value!r} is invalid: {reason}.'
        self.description = f'\nSee the README for the meaning and the allowed values of every key.'
        super().__init__(variables)
