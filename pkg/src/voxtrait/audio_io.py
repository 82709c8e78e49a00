"""WAV ingestion, rating normalization, and fixed-duration segmentation.

Audio enters the pipeline as WAV files listed in a manifest CSV
(``speaker_id,sex,wav_path``); perceptual ratings arrive separately as a
CSV of ``rater_id,speaker_id,rating,scale_max`` rows. This module parses
both, slices each recording into contiguous fixed-length segments, and
collapses raw ratings into one z-scored label per speaker.
"""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SEX_CLASSES = ("male", "female")

PCM_FULL_SCALE = 32768.0


class WavParseError(ValueError):
    """A WAV file violates the RIFF/WAVE chunk layout."""


class UnsupportedWavError(WavParseError):
    """A well-formed WAV file uses an encoding this reader does not accept."""


@dataclass
class Recording:
    """One mono recording with speaker identity.

    Parameters
    ----------
    speaker_id : str
        Opaque speaker identifier.
    sex_class : str or None
        "male" or "female"; None when the caller has not attached
        manifest metadata yet.
    samples : ndarray
        Amplitudes in [-1, 1], float64.
    sample_rate : int
        Sampling rate in Hz.
    """

    speaker_id: str
    sex_class: str | None
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be a positive integer")
        self.sample_rate = int(self.sample_rate)
        if self.sex_class is not None and self.sex_class not in SEX_CLASSES:
            raise ValueError(
                f"sex_class must be one of {SEX_CLASSES}, got {self.sex_class!r}"
            )

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass
class AudioSegment:
    """A contiguous chunk of one recording."""

    speaker_id: str
    segment_index: int
    samples: np.ndarray
    sample_rate: int
    duration_s: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)


@dataclass
class ManifestEntry:
    speaker_id: str
    sex_class: str
    wav_path: Path


def _read_exact(handle, n: int, what: str) -> bytes:
    buf = handle.read(n)
    if len(buf) != n:
        raise WavParseError(f"truncated {what}: expected {n} bytes, got {len(buf)}")
    return buf


def load_wav(path, speaker_id: str | None = None, sex_class: str | None = None) -> Recording:
    """Parse a RIFF/WAVE file into a mono Recording.

    Accepts 16-bit PCM and 32-bit IEEE float encodings with 1 or 2
    channels. Stereo is downmixed by channel averaging; 16-bit samples
    are scaled by 1/32768 so full negative scale maps to -1.0.

    Raises
    ------
    WavParseError
        If the chunk layout is malformed; the message names the
        offending chunk.
    UnsupportedWavError
        For valid WAV files in an encoding outside the supported set.
    """
    path = Path(path)
    name = path.name
    with open(path, "rb") as f:
        header = _read_exact(f, 12, "RIFF header")
        tag, _riff_size, form = struct.unpack("<4sI4s", header)
        if tag != b"RIFF":
            raise WavParseError(f"{name}: not a RIFF file (leading id {tag!r})")
        if form != b"WAVE":
            raise WavParseError(f"{name}: RIFF form type {form!r}, expected b'WAVE'")
        fmt_body = None
        data_body = None
        while True:
            head = f.read(8)
            if not head:
                break
            if len(head) < 8:
                raise WavParseError(f"{name}: truncated chunk header at end of file")
            chunk_id, chunk_size = struct.unpack("<4sI", head)
            label = chunk_id.decode("latin1")
            body = _read_exact(f, chunk_size, f"'{label}' chunk")
            if chunk_size % 2:
                f.read(1)  # RIFF pads odd-sized chunks
            if chunk_id == b"fmt ":
                fmt_body = body
            elif chunk_id == b"data":
                data_body = body
    if fmt_body is None:
        raise WavParseError(f"{name}: missing 'fmt ' chunk")
    if data_body is None:
        raise WavParseError(f"{name}: missing 'data' chunk")
    if len(fmt_body) < 16:
        raise WavParseError(f"{name}: 'fmt ' chunk shorter than 16 bytes")
    audio_format, n_channels, sample_rate, _byte_rate, block_align, bits = struct.unpack(
        "<HHIIHH", fmt_body[:16]
    )
    if n_channels not in (1, 2):
        raise UnsupportedWavError(f"{name}: {n_channels} channels, only mono/stereo read")
    if audio_format == 1 and bits == 16:
        dtype, scale = np.dtype("<i2"), 1.0 / PCM_FULL_SCALE
    elif audio_format == 3 and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedWavError(
            f"{name}: unsupported encoding (format code {audio_format}, {bits}-bit); "
            "expected PCM 16-bit or IEEE float 32-bit"
        )
    frame_size = dtype.itemsize * n_channels
    if block_align not in (0, frame_size):
        raise WavParseError(
            f"{name}: 'fmt ' block align {block_align} does not match "
            f"{frame_size}-byte frames"
        )
    if len(data_body) % frame_size:
        raise WavParseError(f"{name}: 'data' chunk length {len(data_body)} is not a multiple of the frame size")
    raw = np.frombuffer(data_body, dtype=dtype)
    if raw.size == 0:
        raise WavParseError(f"{name}: 'data' chunk holds no samples")
    mono = raw.reshape(-1, n_channels).astype(np.float64).mean(axis=1) * scale
    mono = np.clip(mono, -1.0, 1.0)
    return Recording(
        speaker_id=speaker_id if speaker_id is not None else path.stem,
        sex_class=sex_class,
        samples=mono,
        sample_rate=int(sample_rate),
    )


def save_wav(path, samples, sample_rate: int) -> None:
    """Write mono 16-bit PCM. Round-trips bit-exactly through load_wav."""
    samples = np.asarray(samples, dtype=np.float64)
    pcm = np.clip(np.rint(samples * PCM_FULL_SCALE), -32768, 32767).astype("<i2")
    data = pcm.tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, int(sample_rate), int(sample_rate) * 2, 2, 16)
    with open(path, "wb") as f:
        f.write(struct.pack("<4sI4s", b"RIFF", 4 + 8 + len(fmt) + 8 + len(data), b"WAVE"))
        f.write(struct.pack("<4sI", b"fmt ", len(fmt)))
        f.write(fmt)
        f.write(struct.pack("<4sI", b"data", len(data)))
        f.write(data)
        if len(data) % 2:
            f.write(b"\x00")


def segment(
    rec: Recording,
    duration_s: float,
    min_tail_s: float = 0.5,
    start_index: int = 0,
) -> list[AudioSegment]:
    """Slice a recording into contiguous non-overlapping chunks.

    The recording yields ceil(n_samples / segment_length) chunks; the
    final one may be shorter, and is dropped when it is shorter than
    ``min_tail_s`` seconds. ``start_index`` offsets segment numbering so
    a speaker's multiple recordings can share one index space.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    seg_len = max(int(round(duration_s * rec.sample_rate)), 1)
    n = rec.samples.size
    out: list[AudioSegment] = []
    for j in range(-(-n // seg_len)):
        chunk = rec.samples[j * seg_len : (j + 1) * seg_len]
        dur = chunk.size / rec.sample_rate
        if chunk.size < seg_len and dur < min_tail_s:
            continue
        out.append(
            AudioSegment(
                speaker_id=rec.speaker_id,
                segment_index=start_index + len(out),
                samples=chunk,
                sample_rate=rec.sample_rate,
                duration_s=dur,
            )
        )
    return out


def normalize_ratings(by_rater: dict[str, dict[str, float]]) -> dict[str, float]:
    """Convert raw ratings to one label per speaker.

    Each rater's scores are z-scored (population SD) so heterogeneous
    rating scales become comparable; a speaker's label is the mean of
    their z-scores across the raters who rated them. Raters whose scores
    have zero variance carry no ranking information and are excluded
    with a warning.
    """
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for rater_id in sorted(by_rater):
        scores = by_rater[rater_id]
        values = np.asarray(list(scores.values()), dtype=np.float64)
        if values.size < 2 or values.std() == 0.0:
            warnings.warn(
                f"rater {rater_id!r} has zero rating variance and was excluded",
                stacklevel=2,
            )
            continue
        mean = values.mean()
        sd = values.std()
        for spk, raw in scores.items():
            sums[spk] = sums.get(spk, 0.0) + (raw - mean) / sd
            counts[spk] = counts.get(spk, 0) + 1
    return {spk: float(sums[spk]) / counts[spk] for spk in sums}


def read_manifest(path) -> list[ManifestEntry]:
    """Read the speaker manifest CSV (speaker_id, sex, wav_path).

    Relative wav paths are resolved against the manifest's directory.
    A speaker listed under two different sexes is an error.
    """
    path = Path(path)
    entries: list[ManifestEntry] = []
    sex_seen: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"speaker_id", "sex", "wav_path"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path.name}: manifest header must contain {sorted(required)}")
        for row in reader:
            spk = row["speaker_id"].strip()
            sex = row["sex"].strip().lower()
            if sex not in SEX_CLASSES:
                raise ValueError(f"{path.name}: sex {row['sex']!r} for speaker {spk!r} "
                                 f"is not one of {SEX_CLASSES}")
            if sex_seen.setdefault(spk, sex) != sex:
                raise ValueError(f"{path.name}: speaker {spk!r} listed under two sexes")
            wav = Path(row["wav_path"].strip())
            if not wav.is_absolute():
                wav = path.parent / wav
            entries.append(ManifestEntry(spk, sex, wav))
    if not entries:
        raise ValueError(f"{path.name}: manifest lists no recordings")
    return entries


def read_ratings_csv(path) -> dict[str, dict[str, float]]:
    """Read the ratings CSV into a rater -> speaker -> score mapping."""
    path = Path(path)
    by_rater: dict[str, dict[str, float]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"rater_id", "speaker_id", "rating", "scale_max"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path.name}: ratings header must contain {sorted(required)}")
        for row in reader:
            rater = row["rater_id"].strip()
            spk = row["speaker_id"].strip()
            rating = float(row["rating"])
            scale_max = float(row["scale_max"])
            if rating > scale_max:
                warnings.warn(
                    f"{path.name}: rating {rating} from rater {rater!r} exceeds "
                    f"its scale maximum {scale_max}",
                    stacklevel=2,
                )
            cell = by_rater.setdefault(rater, {})
            if spk in cell:
                raise ValueError(f"{path.name}: duplicate rating for rater {rater!r}, "
                                 f"speaker {spk!r}")
            cell[spk] = rating
    return by_rater
