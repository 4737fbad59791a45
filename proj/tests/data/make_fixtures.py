"""Regenerates the audio fixtures in this directory.

Every file holds the same 0.25 s test signal so the decoders can be checked
sample by sample: channel 0 is a 1 kHz sine at amplitude 0.5 and channel 1
(stereo files only) is a 3 kHz sine at amplitude 0.25.
"""
import numpy as np
import soundfile as sf


def signal(sr, channels):
    t = np.arange(int(0.25 * sr)) / sr
    left = 0.5 * np.sin(2 * np.pi * 1000 * t)
    if channels == 1:
        return left
    right = 0.25 * np.sin(2 * np.pi * 3000 * t)
    return np.stack([left, right], axis=1)


FIXTURES = [
    ("mono16.wav", 44100, 1, "WAV", "PCM_16"),
    ("stereo24.wav", 44100, 2, "WAV", "PCM_24"),
    ("mono_float.wav", 44100, 1, "WAV", "FLOAT"),
    ("mono48k16.wav", 48000, 1, "WAV", "PCM_16"),
    ("mono16.flac", 44100, 1, "FLAC", "PCM_16"),
    ("stereo16.flac", 44100, 2, "FLAC", "PCM_16"),
    ("stereo24.flac", 48000, 2, "FLAC", "PCM_24"),
]

if __name__ == "__main__":
    for name, sr, ch, fmt, sub in FIXTURES:
        sf.write(name, signal(sr, ch), sr, format=fmt, subtype=sub)
