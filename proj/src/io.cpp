#include "acp_phonon/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace acp_phonon {

std::string format_number(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, p);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string csv_table(const std::vector<std::string>& header, const Eigen::MatrixXd& rows) {
  if (static_cast<Index>(header.size()) != rows.cols())
    throw InvalidArgument("csv header does not match the column count");
  std::string s;
  for (std::size_t j = 0; j < header.size(); ++j) s += (j ? "," : "") + header[j];
  s += '\n';
  for (Index i = 0; i < rows.rows(); ++i) {
    for (Index j = 0; j < rows.cols(); ++j) {
      if (j) s += ',';
      s += format_number(rows(i, j));
    }
    s += '\n';
  }
  return s;
}

void write_checkpoint(const std::filesystem::path& directory, const Checkpoint& cp) {
  nlohmann::json meta;
  meta["key"] = cp.key;
  meta["grid_points"] = cp.input_density.size();
  meta["orbitals"] = cp.orbitals.cols();
  std::filesystem::create_directories(directory);
  {
    const std::filesystem::path bin = directory / "checkpoint.bin";
    std::filesystem::path tmp = bin;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(cp.input_density.data()),
              static_cast<std::streamsize>(sizeof(double) * cp.input_density.size()));
    out.write(reinterpret_cast<const char*>(cp.orbitals.data()),
              static_cast<std::streamsize>(sizeof(double) * cp.orbitals.size()));
    out.close();
    if (!out) throw Error("write failed for " + tmp.string());
    std::filesystem::rename(tmp, bin);
  }
  write_text_file(directory / "checkpoint.json", meta.dump(2) + "\n");
}

std::optional<Checkpoint> read_checkpoint(const std::filesystem::path& directory) {
  const auto meta_path = directory / "checkpoint.json";
  const auto bin_path = directory / "checkpoint.bin";
  if (!std::filesystem::exists(meta_path) || !std::filesystem::exists(bin_path))
    return std::nullopt;
  nlohmann::json meta;
  try {
    std::ifstream in(meta_path);
    in >> meta;
  } catch (const std::exception& e) {
    throw Error("unreadable checkpoint metadata: " + std::string(e.what()));
  }
  Checkpoint cp;
  cp.key = meta.at("key").get<std::string>();
  const Index n = meta.at("grid_points").get<Index>();
  const Index m = meta.at("orbitals").get<Index>();
  cp.input_density.resize(n);
  cp.orbitals.resize(n, m);
  std::ifstream in(bin_path, std::ios::binary);
  in.read(reinterpret_cast<char*>(cp.input_density.data()),
          static_cast<std::streamsize>(sizeof(double) * n));
  in.read(reinterpret_cast<char*>(cp.orbitals.data()),
          static_cast<std::streamsize>(sizeof(double) * n * m));
  if (!in) throw Error("checkpoint.bin is truncated");
  return cp;
}

}  // namespace acp_phonon
