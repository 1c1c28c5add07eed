class MiniMPEGException(Exception):
    """
    The exception hierarchy is the same in every sub-package. Each sub-package has its own Exceptions file so that we
    can easily track from where the exception came. All exceptions start from this one – MiniMPEGException, because
    this one contains an important parameter self._relevant_variables. It is printed by any exception so that we can
    immediately see, without debugging, what values the variables had.

    The exit_code attribute is read by the command-line interface. Intermediate exceptions of each sub-package
    override it, so that a shell script can tell apart a bad config from a failed model server.
    """

    exit_code: int = 1

    def __init__(self, variables: dict):
        if not hasattr(self, '_message') or not hasattr(self, 'description'):
            raise AttributeError('Each subclass of the MiniMPEGException must have both "_message" and "description" variables.')

        self._relevant_variables = f"\n\n {' '.join([str(item) for item in variables.items()])}"
        super().__init__(self._message)

    def __str__(self):
        return self._message + '\n\n' + self.description + self._relevant_variables

    @property
    def message(self) -> str:
        return self._message.strip()


class NotSupposedToHappen(MiniMPEGException):
    def __init__(self, variables: dict):
        self._message = f"\nIf you see this error, there's a bug in the code that you use."
        self.description = (f'\nThe "NotSupposedToHappen" errors are raised in the case if an if–else statement or\n'
                            f'a similar piece of code goes to the last possible (impossible in normal case) option.\n'
                            f'For example, if a tool label is neither FFmpeg, nor VVenC, nor Both.')
        super().__init__(variables)
