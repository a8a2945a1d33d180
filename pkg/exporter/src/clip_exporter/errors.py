"""Error taxonomy; each class carries the CLI exit code it maps to."""


class ExporterError(Exception):
    exit_code = 1


class ManifestError(ExporterError):
    """Invalid manifest contents or CLI usage."""

    exit_code = 1


class DataError(ExporterError):
    """Bad inputs: undecodable images, score table problems."""

    exit_code = 2


class BackendUnavailableError(ExporterError):
    """The requested model cannot be loaded in this environment."""

    exit_code = 3
