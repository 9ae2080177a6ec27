class ForgeError(Exception):
    """Base class for failures that abort a dataset run"""


class ConfigError(ForgeError):
    """Invalid or incomplete pipeline configuration"""


class ResourceLoadError(ForgeError):
    """A gazetteer, mapping, lexicon or modifier file could not be loaded"""

    def __init__(self, path, message: str, row: int = None):
        self.path = str(path)
        self.row = row
        where = f"{self.path}, row {row}" if row is not None else self.path
        super().__init__(f"{where}: {message}")


class InputFormatError(ForgeError):
    """The raw export is unreadable or does not follow the column contract"""


class EmitError(ForgeError):
    """The processed dataset could not be written"""
