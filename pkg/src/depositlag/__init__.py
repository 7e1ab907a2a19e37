"""Link publisher-registry and repository metadata and measure deposit time lag."""

from depositlag.model import (
    AuthorName,
    LinkedPublication,
    Platform,
    RegistryRecord,
    RepositoryInfo,
    RepositoryRecord,
    date_diff_days,
)

__version__ = "0.1.0"

__all__ = [
    "AuthorName",
    "LinkedPublication",
    "Platform",
    "RegistryRecord",
    "RepositoryInfo",
    "RepositoryRecord",
    "date_diff_days",
]
