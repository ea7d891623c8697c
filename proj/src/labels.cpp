// Copyright 2026 the probelog authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "probelog/labels.hpp"

#include <fstream>
#include <sstream>

#include "probelog/error.hpp"
#include "probelog/pblg.hpp"

namespace probelog {

void LabelTable::set(const std::string& model_id, std::size_t logit,
                     std::string label) {
  labels_[{model_id, logit}] = std::move(label);
}

std::optional<std::string> LabelTable::find(const std::string& model_id,
                                            std::size_t logit) const {
  auto it = labels_.find({model_id, logit});
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> LabelTable::model_labels(const std::string& model_id) const {
  std::vector<std::string> out;
  for (auto it = labels_.lower_bound({model_id, 0});
       it != labels_.end() && it->first.first == model_id; ++it) {
    out.push_back(it->second);
  }
  return out;
}

LabelTable LabelTable::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  LabelTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw Error(ErrorCode::kCorruptFile,
                  path.string() + ":" + std::to_string(line_no) +
                      ": expected model_id<TAB>logit<TAB>label");
    }
    std::size_t logit = 0;
    try {
      logit = std::stoul(line.substr(t1 + 1, t2 - t1 - 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kCorruptFile,
                  path.string() + ":" + std::to_string(line_no) + ": bad logit index");
    }
    table.set(line.substr(0, t1), logit, line.substr(t2 + 1));
  }
  return table;
}

void LabelTable::save_tsv(const std::filesystem::path& path) const {
  std::ostringstream out;
  for (const auto& [key, label] : labels_) {
    out << key.first << '\t' << key.second << '\t' << label << '\n';
  }
  const std::string text = out.str();
  write_file_bytes(path, std::span<const std::uint8_t>(
                             reinterpret_cast<const std::uint8_t*>(text.data()),
                             text.size()));
}

}  // namespace probelog
