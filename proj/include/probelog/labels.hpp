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
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace probelog {

//! Concept label per (model_id, logit_index). Used only for evaluation.
class LabelTable {
 public:
  void set(const std::string& model_id, std::size_t logit, std::string label);
  std::optional<std::string> find(const std::string& model_id,
                                  std::size_t logit) const;
  //! Every label of one model, in logit order.
  std::vector<std::string> model_labels(const std::string& model_id) const;
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  const std::map<std::pair<std::string, std::size_t>, std::string>& entries() const {
    return labels_;
  }

  //! TSV lines `model_id<TAB>logit_index<TAB>label`; `#` starts a comment.
  static LabelTable load_tsv(const std::filesystem::path& path);
  void save_tsv(const std::filesystem::path& path) const;

 private:
  std::map<std::pair<std::string, std::size_t>, std::string> labels_;
};

}  // namespace probelog
