#include "safer/requirements.hpp"

#include "safer/csv.hpp"
#include "safer/error.hpp"
#include "safer/text.hpp"

#include <algorithm>
#include <optional>

namespace safer {

std::vector<Requirement> parse_requirements(std::string_view csv_text, const std::string& id_column,
                                            const std::vector<std::string>& data_columns) {
  auto rows = csv::parse(csv_text);
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no header row");

  std::vector<std::string> header;
  for (const auto& h : rows.front().cells) header.emplace_back(text::trim(h));
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<std::string> missing;
  auto id_index = column(id_column);
  if (!id_index) missing.push_back(id_column);
  std::vector<std::size_t> data_index;
  for (const auto& c : data_columns) {
    if (auto i = column(c)) {
      data_index.push_back(*i);
    } else {
      missing.push_back(c);
    }
  }
  if (data_columns.empty()) missing.push_back("<no data columns configured>");
  if (!missing.empty()) throw Error(ErrorCode::MissingColumn, "header lacks required columns", missing);
  if (rows.size() == 1) throw Error(ErrorCode::EmptyDataset, "dataset has a header but no rows");

  std::vector<Requirement> out;
  std::map<std::string, std::size_t> first_line;
  std::vector<std::string> duplicates, empties;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto cell = [&](std::size_t i) { return i < row.cells.size() ? row.cells[i] : std::string{}; };

    Requirement req;
    req.req_id = std::string(text::trim(cell(*id_index)));
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i != *id_index) req.extra[header[i]] = cell(i);
    }
    if (data_index.size() == 1) {
      req.text = std::string(text::trim(cell(data_index.front())));
    } else {
      std::vector<std::string> lines;
      for (std::size_t k = 0; k < data_index.size(); ++k) {
        auto v = text::trim(cell(data_index[k]));
        if (!v.empty()) lines.push_back(data_columns[k] + ": " + std::string(v));
      }
      req.text = text::join(lines, "\n");
    }

    if (req.req_id.empty() || req.text.empty()) {
      empties.push_back("line " + std::to_string(row.line) + (req.req_id.empty() ? " (empty id)" : " (" + req.req_id + ")"));
      continue;
    }
    auto [it, inserted] = first_line.emplace(req.req_id, row.line);
    if (!inserted) {
      duplicates.push_back("ReqID '" + req.req_id + "' on lines " + std::to_string(it->second) + " and " +
                           std::to_string(row.line));
      continue;
    }
    out.push_back(std::move(req));
  }
  if (!duplicates.empty()) throw Error(ErrorCode::DuplicateReqId, "requirement ids repeat", duplicates);
  if (!empties.empty()) throw Error(ErrorCode::EmptyRequirementText, "rows with empty id or text", empties);
  return out;
}

RequirementSet load_requirements(const std::filesystem::path& path, const std::string& id_column,
                                 const std::vector<std::string>& data_columns, std::string dataset_name) {
  const std::string bytes = text::read_file(path);
  RequirementSet set;
  set.dataset_name = dataset_name.empty() ? path.stem().string() : std::move(dataset_name);
  set.dataset_id = text::sha256_hex(bytes).substr(0, 12);
  set.items = parse_requirements(bytes, id_column, data_columns);
  return set;
}

std::vector<RequirementChunk> chunk(const std::vector<Requirement>& reqs, long chunk_size, long max_items) {
  if (chunk_size <= 0) {
    throw Error(ErrorCode::InvalidChunkSize, "chunk_size must be at least 1, got " + std::to_string(chunk_size));
  }
  std::size_t n = reqs.size();
  if (max_items >= 0) n = std::min(n, static_cast<std::size_t>(max_items));
  const auto k = static_cast<std::size_t>(chunk_size);

  std::vector<RequirementChunk> out;
  out.reserve((n + k - 1) / k);
  for (std::size_t start = 0; start < n; start += k) {
    RequirementChunk c;
    c.index = out.size();
    c.items.assign(reqs.begin() + static_cast<long>(start), reqs.begin() + static_cast<long>(std::min(n, start + k)));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<PromptRow> to_prompt_rows(const std::vector<Requirement>& reqs) {
  std::vector<PromptRow> rows;
  rows.reserve(reqs.size());
  for (const auto& r : reqs) rows.push_back(PromptRow{r.req_id, r.text});
  return rows;
}

}  // namespace safer
