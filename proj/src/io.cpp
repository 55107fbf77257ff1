#include "fosense/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "fosense/error.hpp"

namespace fosense::io {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) {
    throw Error(ErrorKind::kIo, "failed to format number");
  }
  return std::string(buf, ptr);
}

double parse_double(std::string_view token, std::string_view context) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) {
    token.remove_prefix(1);
  }
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t')) {
    token.remove_suffix(1);
  }
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc{} ||
      ptr != token.data() + token.size()) {
    throw Error(ErrorKind::kIo, std::string(context) + ": cannot parse '" +
                                    std::string(token) + "' as a number");
  }
  return v;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  return lines;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const std::filesystem::path& path,
                       std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorKind::kIo, "cannot write '" + tmp.string() + "'");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw Error(ErrorKind::kIo, "short write to '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot rename into '" + path.string() + "'");
  }
}

std::string waveform_to_csv(const Waveform& w) {
  std::string out = "# sample_rate_hz=" + format_double(w.sample_rate()) +
                    " t0_s=" + format_double(w.t0());
  if (w.lowpass_hz()) out += " lowpass_hz=" + format_double(*w.lowpass_hz());
  out += '\n';
  for (double v : w.samples()) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

Waveform waveform_from_csv(std::string_view text, std::string_view source) {
  const auto lines = split_lines(text);
  const std::string ctx(source);
  if (lines.empty() || lines[0].rfind("#", 0) != 0) {
    throw Error(ErrorKind::kIo, ctx + ": missing '# sample_rate_hz=' header");
  }

  std::optional<double> rate;
  double t0 = 0.0;
  std::optional<double> lowpass;
  std::istringstream hdr(lines[0].substr(1));
  std::string kv;
  while (hdr >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = kv.substr(0, eq);
    const double val = parse_double(std::string_view(kv).substr(eq + 1), ctx);
    if (key == "sample_rate_hz") rate = val;
    else if (key == "t0_s") t0 = val;
    else if (key == "lowpass_hz") lowpass = val;
  }
  if (!rate) {
    throw Error(ErrorKind::kIo, ctx + ": header lacks sample_rate_hz");
  }

  std::vector<double> samples;
  samples.reserve(lines.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    samples.push_back(
        parse_double(lines[i], ctx + " line " + std::to_string(i + 1)));
  }
  return Waveform(std::move(samples), *rate, t0, lowpass);
}

Waveform read_waveform(const std::filesystem::path& path) {
  return waveform_from_csv(read_text(path), path.string());
}

void write_waveform(const std::filesystem::path& path, const Waveform& w) {
  write_text_atomic(path, waveform_to_csv(w));
}

}  // namespace fosense::io
