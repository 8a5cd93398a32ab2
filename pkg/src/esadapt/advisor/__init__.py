from .prompt import (
    SIGMA_BOUNDS,
    SYSTEM_MESSAGE,
    USER_TEMPLATE,
    build_prompt,
    condense_log,
    format_float,
    parse_recommendation,
    sigma_changes_from,
)
from .providers import (
    API_KEY_ENV,
    PROFILES,
    AdvisorConfig,
    AdvisorError,
    HttpChatProvider,
    RateLimiter,
    ScriptedProvider,
    SurrogateOneFifthProvider,
    make_provider,
    query,
    read_replay_file,
)
from .transcripts import (
    PromptTranscript,
    TranscriptFormatError,
    format_transcripts,
    parse_transcripts,
    read_transcripts,
    write_transcripts,
)

__all__ = [
    "API_KEY_ENV",
    "PROFILES",
    "SIGMA_BOUNDS",
    "SYSTEM_MESSAGE",
    "USER_TEMPLATE",
    "AdvisorConfig",
    "AdvisorError",
    "HttpChatProvider",
    "PromptTranscript",
    "RateLimiter",
    "ScriptedProvider",
    "SurrogateOneFifthProvider",
    "TranscriptFormatError",
    "build_prompt",
    "condense_log",
    "format_float",
    "format_transcripts",
    "make_provider",
    "parse_recommendation",
    "parse_transcripts",
    "query",
    "read_replay_file",
    "read_transcripts",
    "sigma_changes_from",
    "write_transcripts",
]
