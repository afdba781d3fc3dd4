// ctcasr/frontend.hpp

// Copyright 2026  The ctcasr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Feature extraction: log-Mel filterbank energies, frame stacking, one-hot
// symbol streams, and the WAV / feature-matrix file readers.

#ifndef CTCASR_FRONTEND_HPP_
#define CTCASR_FRONTEND_HPP_

#include "ctcasr/common.hpp"

#include <fftw3.h>

#include <cstring>
#include <fstream>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace ctcasr {

struct FeatureMatrix {
  Matrix<double> frames;  // T x D
  double frame_period = 0.01;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

struct LogMelOptions {
  int num_mels = 40;
  double frame_period = 0.01;
  double window = 0.025;
  double log_floor = 1e-10;
  bool mean_normalize = true;
};

inline double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Centre frequency (Hz) of each triangular mel band spanning [0, sr/2].
inline std::vector<double> MelCenters(int num_mels, double sample_rate) {
  const double top = HzToMel(sample_rate / 2.0);
  std::vector<double> c(static_cast<std::size_t>(num_mels));
  for (int m = 0; m < num_mels; ++m) c[static_cast<std::size_t>(m)] = MelToHz(top * (m + 1) / (num_mels + 1));
  return c;
}

/// Subtracts each dimension's mean over the utterance.  No variance scaling.
inline void MeanNormalize(Matrix<double> &frames) {
  if (frames.rows() == 0) return;
  const Eigen::RowVectorXd mean = frames.colwise().mean();
  frames.rowwise() -= mean;
}

/// Log-Mel filterbank features: Hann window, magnitude spectrum, triangular
/// mel filters, floored log, then (optionally) per-utterance mean removal.
inline FeatureMatrix LogMel(std::span<const double> wave, double sample_rate,
                            const LogMelOptions &opt = {}) {
  if (sample_rate < 8000.0) throw DataError(StrCat("sample rate ", sample_rate, " below 8 kHz"));
  const auto win = static_cast<std::size_t>(std::lround(opt.window * sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(opt.frame_period * sample_rate));
  if (wave.empty() || wave.size() < win) {
    throw DataError(StrCat("waveform of ", wave.size(), " samples is shorter than one ",
                           win, "-sample window"));
  }
  const std::size_t num_frames = (wave.size() - win) / hop + 1;
  std::size_t nfft = 1;
  while (nfft < win) nfft <<= 1;
  const std::size_t nbins = nfft / 2 + 1;

  // Triangular filters on the FFT bin grid.
  const double top = HzToMel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(opt.num_mels + 2));
  for (std::size_t m = 0; m < edges.size(); ++m) {
    edges[m] = MelToHz(top * static_cast<double>(m) / (opt.num_mels + 1));
  }
  Matrix<double> fbank = Matrix<double>::Zero(opt.num_mels, static_cast<Eigen::Index>(nbins));
  for (int m = 0; m < opt.num_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (std::size_t k = 0; k < nbins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(nfft);
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fbank(m, static_cast<Eigen::Index>(k)) = w;
    }
  }

  std::vector<double> hann(win);
  for (std::size_t i = 0; i < win; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                   static_cast<double>(win - 1));
  }

  using Buffer = std::unique_ptr<double, decltype(&fftw_free)>;
  using Spectrum = std::unique_ptr<fftw_complex, decltype(&fftw_free)>;
  Buffer in(fftw_alloc_real(nfft), &fftw_free);
  Spectrum out(fftw_alloc_complex(nbins), &fftw_free);
  std::unique_ptr<fftw_plan_s, decltype(&fftw_destroy_plan)> plan(
      fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in.get(), out.get(), FFTW_ESTIMATE),
      &fftw_destroy_plan);

  FeatureMatrix feats;
  feats.frame_period = opt.frame_period;
  feats.frames.resize(static_cast<Eigen::Index>(num_frames), opt.num_mels);
  Vector<double> mag(static_cast<Eigen::Index>(nbins));
  for (std::size_t t = 0; t < num_frames; ++t) {
    std::fill(in.get(), in.get() + nfft, 0.0);
    for (std::size_t i = 0; i < win; ++i) in.get()[i] = wave[t * hop + i] * hann[i];
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < nbins; ++k) {
      mag(static_cast<Eigen::Index>(k)) = std::hypot(out.get()[k][0], out.get()[k][1]);
    }
    const Vector<double> energies = fbank * mag;
    for (int m = 0; m < opt.num_mels; ++m) {
      feats.frames(static_cast<Eigen::Index>(t), m) = std::log(std::max(energies(m), opt.log_floor));
    }
  }
  if (opt.mean_normalize) MeanNormalize(feats.frames);
  return feats;
}

/// Concatenates three consecutive frames: T x D -> ceil(T/3) x 3D.  The tail
/// is padded by repeating the last frame.
inline FeatureMatrix Stack3(const FeatureMatrix &in) {
  const Eigen::Index T = in.num_frames();
  const Eigen::Index D = in.dim();
  FeatureMatrix out;
  out.frame_period = in.frame_period * 3.0;
  out.frames.resize((T + 2) / 3, 3 * D);
  for (Eigen::Index s = 0; s < out.frames.rows(); ++s) {
    for (Eigen::Index k = 0; k < 3; ++k) {
      const Eigen::Index src = std::min(3 * s + k, T - 1);
      out.frames.block(s, k * D, 1, D) = in.frames.row(src);
    }
  }
  return out;
}

/// Each id becomes `upsample` identical one-hot rows of width Q.
inline FeatureMatrix OneHotStream(std::span<const int> ids, int num_units, int upsample = 3) {
  if (upsample < 1) throw UsageError(StrCat("upsample factor must be >= 1, got ", upsample));
  FeatureMatrix out;
  out.frames = Matrix<double>::Zero(static_cast<Eigen::Index>(ids.size()) * upsample, num_units);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= num_units) {
      throw DataError(StrCat("unit id ", ids[i], " outside one-hot width ", num_units));
    }
    for (int k = 0; k < upsample; ++k) {
      out.frames(static_cast<Eigen::Index>(i) * upsample + k, ids[i]) = 1.0;
    }
  }
  return out;
}

struct Waveform {
  std::vector<double> samples;  // mono, scaled to [-1, 1)
  double sample_rate = 16000.0;
};

namespace detail {

inline std::uint32_t Le32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
inline std::uint16_t Le16(const unsigned char *p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

}  // namespace detail

/// Reads 16-bit PCM RIFF/WAVE.  Multi-channel audio is averaged to mono.
inline Waveform ReadWav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(StrCat("cannot read ", path));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), {});
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DataError(StrCat(path, ": not a RIFF/WAVE file"));
  }
  std::size_t pos = 12;
  int channels = 0;
  int bits = 0;
  Waveform w;
  bool have_fmt = false;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = detail::Le32(&bytes[pos + 4]);
    const unsigned char *body = &bytes[pos + 8];
    if (pos + 8 + len > bytes.size()) throw DataError(StrCat(path, ": truncated chunk"));
    if (std::memcmp(&bytes[pos], "fmt ", 4) == 0 && len >= 16) {
      if (detail::Le16(body) != 1) throw DataError(StrCat(path, ": only PCM WAV is supported"));
      channels = detail::Le16(body + 2);
      w.sample_rate = detail::Le32(body + 4);
      bits = detail::Le16(body + 14);
      have_fmt = true;
    } else if (std::memcmp(&bytes[pos], "data", 4) == 0) {
      if (!have_fmt || bits != 16 || channels < 1) {
        throw DataError(StrCat(path, ": expected 16-bit PCM"));
      }
      const std::size_t frames = len / (2u * static_cast<std::size_t>(channels));
      w.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
          const auto s = static_cast<std::int16_t>(detail::Le16(body + 2 * (i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c))));
          acc += s / 32768.0;
        }
        w.samples[i] = acc / channels;
      }
      return w;
    }
    pos += 8 + len + (len & 1u);
  }
  throw DataError(StrCat(path, ": no data chunk"));
}

inline void WriteWav(const std::string &path, const Waveform &w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(StrCat("cannot write ", path));
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  const auto rate = static_cast<std::uint32_t>(w.sample_rate);
  auto u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char *>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { os.write(reinterpret_cast<const char *>(&v), 2); };
  os.write("RIFF", 4);
  u32(36 + 2 * n);
  os.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(1);
  u32(rate);
  u32(rate * 2);
  u16(2);
  u16(16);
  os.write("data", 4);
  u32(2 * n);
  for (double s : w.samples) {
    const double clamped = std::clamp(s, -1.0, 32767.0 / 32768.0);
    u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clamped * 32768.0))));
  }
}

// Binary feature matrix (".feat"), little-endian:
//   char[4] "CTFM", u32 version (1), u64 rows, u64 cols, f64 frame_period,
//   f64[rows*cols] row-major data.
inline void WriteFeatures(const std::string &path, const FeatureMatrix &f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(StrCat("cannot write ", path));
  os.write("CTFM", 4);
  const std::uint32_t version = 1;
  const auto rows = static_cast<std::uint64_t>(f.frames.rows());
  const auto cols = static_cast<std::uint64_t>(f.frames.cols());
  os.write(reinterpret_cast<const char *>(&version), 4);
  os.write(reinterpret_cast<const char *>(&rows), 8);
  os.write(reinterpret_cast<const char *>(&cols), 8);
  os.write(reinterpret_cast<const char *>(&f.frame_period), 8);
  os.write(reinterpret_cast<const char *>(f.frames.data()),
           static_cast<std::streamsize>(rows * cols * sizeof(double)));
}

/// Reads ".feat" binary, ".wav" (via LogMel) or otherwise a TSV matrix with
/// one frame per line.
inline FeatureMatrix ReadFeatures(const std::string &path, const LogMelOptions &opt = {}) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".wav")) {
    const Waveform w = ReadWav(path);
    return LogMel(w.samples, w.sample_rate, opt);
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(StrCat("cannot read features ", path));
  FeatureMatrix f;
  if (ends_with(".feat")) {
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    is.read(magic, 4);
    is.read(reinterpret_cast<char *>(&version), 4);
    is.read(reinterpret_cast<char *>(&rows), 8);
    is.read(reinterpret_cast<char *>(&cols), 8);
    is.read(reinterpret_cast<char *>(&f.frame_period), 8);
    if (!is || std::memcmp(magic, "CTFM", 4) != 0 || version != 1) {
      throw DataError(StrCat(path, ": bad feature file header"));
    }
    f.frames.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    is.read(reinterpret_cast<char *>(f.frames.data()),
            static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!is) throw DataError(StrCat(path, ": truncated feature data"));
    return f;
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    double v = 0.0;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) throw DataError(StrCat(path, ": non-numeric value in row ", rows.size()));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(StrCat(path, ": ragged row ", rows.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(StrCat(path, ": empty feature matrix"));
  f.frames.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t d = 0; d < rows[t].size(); ++d) {
      f.frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d)) = rows[t][d];
    }
  }
  return f;
}

}  // namespace ctcasr

#endif  // CTCASR_FRONTEND_HPP_
