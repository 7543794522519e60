#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace latalign {

struct EdfSignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = -1.0;
  double physical_max = 1.0;
  int digital_min = -32768;
  int digital_max = 32767;
  std::string prefiltering;
  std::size_t samples_per_record = 0;
  std::string reserved;

  bool is_annotation() const;
  /// Physical units per digital step.
  double gain() const;
};

struct EdfHeader {
  std::string version = "0";
  std::string patient;
  std::string recording;
  std::string start_date = "01.01.00";
  std::string start_time = "00.00.00";
  std::size_t header_bytes = 0;
  std::string reserved;
  long record_count = 0;
  double record_duration_s = 1.0;
  std::vector<EdfSignalHeader> signals;

  bool is_edf_plus() const;
};

struct EdfAnnotation {
  double onset_s = 0.0;
  double duration_s = 0.0;
  std::string text;
};

/// Decoded recording. `signals[i]` holds physical values of header.signals[i];
/// annotation channels are decoded into `annotations` and left empty.
struct EdfRecording {
  EdfHeader header;
  std::vector<std::vector<double>> signals;
  std::vector<EdfAnnotation> annotations;

  std::optional<std::size_t> find_signal(const std::string& label) const;
  double sample_rate(std::size_t signal) const;
};

EdfRecording parse_edf(const std::filesystem::path& path);
EdfRecording parse_edf_bytes(const std::string& bytes);

/// Serializes to EDF (or EDF+ when annotations are present, adding an
/// "EDF Annotations" channel). Physical values are quantized to the digital
/// range of each signal. The header's record count and byte length are
/// derived from the data.
std::string serialize_edf(const EdfRecording& recording);
void write_edf(const std::filesystem::path& path, const EdfRecording& recording);

}  // namespace latalign
