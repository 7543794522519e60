#include "latalign/io/edf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "latalign/error.hpp"

namespace latalign {

namespace {

constexpr std::size_t kFixedHeader = 256;
constexpr std::size_t kPerSignalHeader = 256;
constexpr const char* kAnnotationLabel = "EDF Annotations";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(' ');
  return std::string(s.substr(b, e - b + 1));
}

class HeaderCursor {
 public:
  HeaderCursor(const std::string& bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  std::string field(std::size_t width, const char* name) {
    require(pos_ + width <= bytes_.size(), ErrorCode::MalformedHeader,
            std::string("header ends inside field '") + name + "'");
    std::string_view raw(bytes_.data() + pos_, width);
    for (char ch : raw)
      require(static_cast<unsigned char>(ch) >= 32 && static_cast<unsigned char>(ch) < 127,
              ErrorCode::MalformedHeader, std::string("non-ASCII byte in field '") + name + "'");
    pos_ += width;
    return trim(raw);
  }

  double number(std::size_t width, const char* name) {
    const std::string text = field(width, name);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    require(!text.empty() && res.ec == std::errc() && res.ptr == text.data() + text.size(),
            ErrorCode::MalformedHeader,
            std::string("field '") + name + "' is not a number: '" + text + "'");
    return value;
  }

  long integer(std::size_t width, const char* name) {
    const std::string text = field(width, name);
    long value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    require(!text.empty() && res.ec == std::errc() && res.ptr == text.data() + text.size(),
            ErrorCode::MalformedHeader,
            std::string("field '") + name + "' is not an integer: '" + text + "'");
    return value;
  }

  std::size_t position() const { return pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_;
};

void parse_tals(const char* data, std::size_t size, std::vector<EdfAnnotation>& out) {
  std::size_t pos = 0;
  while (pos < size) {
    if (data[pos] == '\0') {
      ++pos;
      continue;
    }
    const std::size_t end = std::find(data + pos, data + size, '\0') - data;
    const std::string tal(data + pos, end - pos);
    pos = end + 1;

    const auto first = tal.find('\x14');
    if (first == std::string::npos) continue;
    const std::string timing = tal.substr(0, first);
    const auto dur_sep = timing.find('\x15');
    EdfAnnotation base;
    try {
      base.onset_s = std::stod(timing.substr(0, dur_sep));
      if (dur_sep != std::string::npos) base.duration_s = std::stod(timing.substr(dur_sep + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::MalformedHeader, "unparseable annotation onset '" + timing + "'");
    }
    std::size_t p = first + 1;
    while (p < tal.size()) {
      const auto q = tal.find('\x14', p);
      const std::string text = tal.substr(p, q == std::string::npos ? std::string::npos : q - p);
      if (!text.empty()) {
        EdfAnnotation a = base;
        a.text = text;
        out.push_back(std::move(a));
      }
      if (q == std::string::npos) break;
      p = q + 1;
    }
  }
}

std::string pad_field(const std::string& value, std::size_t width) {
  std::string s = value.substr(0, width);
  s.resize(width, ' ');
  return s;
}

std::string number_field(double value, std::size_t width) {
  std::ostringstream os;
  os.precision(static_cast<int>(width));
  os << value;
  std::string s = os.str();
  // Shrink precision until the ASCII representation fits.
  for (int prec = static_cast<int>(width) - 1; s.size() > width && prec > 0; --prec) {
    std::ostringstream o;
    o.precision(prec);
    o << value;
    s = o.str();
  }
  require(s.size() <= width, ErrorCode::InvalidArgument,
          "value does not fit an EDF header field: " + s);
  return pad_field(s, width);
}

std::string format_onset(double seconds) {
  std::ostringstream os;
  os.precision(12);
  os << (seconds >= 0 ? "+" : "") << seconds;
  return os.str();
}

}  // namespace

bool EdfSignalHeader::is_annotation() const { return label == kAnnotationLabel; }

double EdfSignalHeader::gain() const {
  return (physical_max - physical_min) / static_cast<double>(digital_max - digital_min);
}

bool EdfHeader::is_edf_plus() const { return reserved.rfind("EDF+", 0) == 0; }

std::optional<std::size_t> EdfRecording::find_signal(const std::string& label) const {
  for (std::size_t i = 0; i < header.signals.size(); ++i)
    if (header.signals[i].label == label) return i;
  return std::nullopt;
}

double EdfRecording::sample_rate(std::size_t signal) const {
  return static_cast<double>(header.signals.at(signal).samples_per_record) /
         header.record_duration_s;
}

EdfRecording parse_edf_bytes(const std::string& bytes) {
  require(bytes.size() >= kFixedHeader, ErrorCode::MalformedHeader,
          "file shorter than the 256-byte EDF header");
  EdfRecording rec;
  EdfHeader& h = rec.header;
  HeaderCursor cur(bytes, 0);
  h.version = cur.field(8, "version");
  require(h.version == "0", ErrorCode::MalformedHeader, "unsupported EDF version '" + h.version + "'");
  h.patient = cur.field(80, "patient");
  h.recording = cur.field(80, "recording");
  h.start_date = cur.field(8, "startdate");
  h.start_time = cur.field(8, "starttime");
  const long header_bytes = cur.integer(8, "header bytes");
  h.reserved = cur.field(44, "reserved");
  h.record_count = cur.integer(8, "number of data records");
  h.record_duration_s = cur.number(8, "duration of a data record");
  const long ns = cur.integer(4, "number of signals");
  require(ns >= 1, ErrorCode::MalformedHeader, "number of signals must be positive");
  require(header_bytes == static_cast<long>(kFixedHeader + ns * kPerSignalHeader),
          ErrorCode::MalformedHeader,
          "header byte count " + std::to_string(header_bytes) + " inconsistent with " +
              std::to_string(ns) + " signals");
  require(h.record_duration_s >= 0.0, ErrorCode::MalformedHeader, "negative record duration");
  h.header_bytes = static_cast<std::size_t>(header_bytes);
  require(bytes.size() >= h.header_bytes, ErrorCode::MalformedHeader,
          "file ends inside the signal header block");

  const auto n = static_cast<std::size_t>(ns);
  h.signals.resize(n);
  for (auto& s : h.signals) s.label = cur.field(16, "label");
  for (auto& s : h.signals) s.transducer = cur.field(80, "transducer");
  for (auto& s : h.signals) s.physical_dimension = cur.field(8, "physical dimension");
  for (auto& s : h.signals) s.physical_min = cur.number(8, "physical minimum");
  for (auto& s : h.signals) s.physical_max = cur.number(8, "physical maximum");
  for (auto& s : h.signals) s.digital_min = static_cast<int>(cur.integer(8, "digital minimum"));
  for (auto& s : h.signals) s.digital_max = static_cast<int>(cur.integer(8, "digital maximum"));
  for (auto& s : h.signals) s.prefiltering = cur.field(80, "prefiltering");
  for (auto& s : h.signals) {
    const long spr = cur.integer(8, "samples per record");
    require(spr >= 1, ErrorCode::MalformedHeader, "samples per record must be positive");
    s.samples_per_record = static_cast<std::size_t>(spr);
  }
  for (auto& s : h.signals) s.reserved = cur.field(32, "signal reserved");

  for (const auto& s : h.signals) {
    if (s.is_annotation()) continue;
    require(s.physical_max > s.physical_min, ErrorCode::MalformedHeader,
            "signal '" + s.label + "' needs physical_max > physical_min");
    require(s.digital_max > s.digital_min, ErrorCode::MalformedHeader,
            "signal '" + s.label + "' needs digital_max > digital_min");
  }

  std::size_t record_bytes = 0;
  for (const auto& s : h.signals) record_bytes += 2 * s.samples_per_record;
  const std::size_t available = bytes.size() - h.header_bytes;
  if (h.record_count < 0) h.record_count = static_cast<long>(available / record_bytes);
  const auto records = static_cast<std::size_t>(h.record_count);

  rec.signals.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!h.signals[i].is_annotation()) rec.signals[i].reserve(records * h.signals[i].samples_per_record);

  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t r = 0; r < records; ++r) {
    const std::size_t base = h.header_bytes + r * record_bytes;
    require(base + record_bytes <= bytes.size(), ErrorCode::TruncatedRecord,
            "data record " + std::to_string(r) + " of " + std::to_string(records) +
                " is truncated");
    std::size_t off = base;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = h.signals[i];
      if (s.is_annotation()) {
        parse_tals(bytes.data() + off, 2 * s.samples_per_record, rec.annotations);
      } else {
        const double g = s.gain();
        for (std::size_t k = 0; k < s.samples_per_record; ++k) {
          const auto lo = raw[off + 2 * k];
          const auto hi = raw[off + 2 * k + 1];
          const auto digital = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
          rec.signals[i].push_back(s.physical_min + (digital - s.digital_min) * g);
        }
      }
      off += 2 * s.samples_per_record;
    }
  }
  return rec;
}

EdfRecording parse_edf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_edf_bytes(ss.str());
}

std::string serialize_edf(const EdfRecording& recording) {
  const EdfHeader& h = recording.header;
  std::vector<EdfSignalHeader> signals;
  std::vector<const std::vector<double>*> data;
  for (std::size_t i = 0; i < h.signals.size(); ++i) {
    if (h.signals[i].is_annotation()) continue;
    signals.push_back(h.signals[i]);
    data.push_back(&recording.signals.at(i));
  }
  require(!signals.empty() || !recording.annotations.empty(), ErrorCode::InvalidArgument,
          "nothing to write");

  std::size_t records = 0;
  for (std::size_t i = 0; i < signals.size(); ++i) {
    require(signals[i].samples_per_record > 0, ErrorCode::InvalidArgument,
            "samples per record must be positive");
    const std::size_t r = (data[i]->size() + signals[i].samples_per_record - 1) /
                          signals[i].samples_per_record;
    records = std::max(records, r);
  }
  records = std::max<std::size_t>(records, 1);

  // Annotation payload: a timekeeping TAL per record, all annotations in record 0.
  const bool plus = !recording.annotations.empty();
  std::vector<std::string> tal_records(records);
  if (plus) {
    for (std::size_t r = 0; r < records; ++r) {
      tal_records[r] = format_onset(static_cast<double>(r) * h.record_duration_s) + "\x14\x14";
      tal_records[r].push_back('\0');
    }
    for (const auto& a : recording.annotations) {
      std::string tal = format_onset(a.onset_s);
      if (a.duration_s > 0.0) {
        std::ostringstream os;
        os.precision(12);
        os << a.duration_s;
        tal += "\x15" + os.str();
      }
      tal += "\x14" + a.text + "\x14";
      tal.push_back('\0');
      tal_records[0] += tal;
    }
    std::size_t longest = 0;
    for (const auto& t : tal_records) longest = std::max(longest, t.size());
    EdfSignalHeader ann;
    ann.label = kAnnotationLabel;
    ann.physical_min = -1;
    ann.physical_max = 1;
    ann.samples_per_record = (longest + 1) / 2;
    signals.push_back(ann);
    data.push_back(nullptr);
  }

  const std::size_t ns = signals.size();
  std::string out;
  out += pad_field(h.version, 8);
  out += pad_field(h.patient, 80);
  out += pad_field(h.recording, 80);
  out += pad_field(h.start_date, 8);
  out += pad_field(h.start_time, 8);
  out += pad_field(std::to_string(kFixedHeader + ns * kPerSignalHeader), 8);
  out += pad_field(plus ? "EDF+C" : h.reserved, 44);
  out += pad_field(std::to_string(records), 8);
  out += number_field(h.record_duration_s, 8);
  out += pad_field(std::to_string(ns), 4);
  for (const auto& s : signals) out += pad_field(s.label, 16);
  for (const auto& s : signals) out += pad_field(s.transducer, 80);
  for (const auto& s : signals) out += pad_field(s.physical_dimension, 8);
  for (const auto& s : signals) out += number_field(s.physical_min, 8);
  for (const auto& s : signals) out += number_field(s.physical_max, 8);
  for (const auto& s : signals) out += pad_field(std::to_string(s.digital_min), 8);
  for (const auto& s : signals) out += pad_field(std::to_string(s.digital_max), 8);
  for (const auto& s : signals) out += pad_field(s.prefiltering, 80);
  for (const auto& s : signals) out += pad_field(std::to_string(s.samples_per_record), 8);
  for (const auto& s : signals) out += pad_field(s.reserved, 32);

  for (std::size_t r = 0; r < records; ++r) {
    for (std::size_t i = 0; i < ns; ++i) {
      const auto& s = signals[i];
      if (data[i] == nullptr) {
        std::string payload = tal_records[r];
        payload.resize(2 * s.samples_per_record, '\0');
        out += payload;
        continue;
      }
      const double g = s.gain();
      for (std::size_t k = 0; k < s.samples_per_record; ++k) {
        const std::size_t idx = r * s.samples_per_record + k;
        long digital = s.digital_min;
        if (idx < data[i]->size()) {
          digital = std::lround(((*data[i])[idx] - s.physical_min) / g) + s.digital_min;
          digital = std::clamp<long>(digital, s.digital_min, s.digital_max);
        }
        const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(digital));
        out.push_back(static_cast<char>(u & 0xff));
        out.push_back(static_cast<char>(u >> 8));
      }
    }
  }
  return out;
}

void write_edf(const std::filesystem::path& path, const EdfRecording& recording) {
  const std::string bytes = serialize_edf(recording);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace latalign
