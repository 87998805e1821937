#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qsbd/core/error.hpp"
#include "qsbd/core/rng.hpp"

namespace qsbd::eval {

struct Split {
  std::string name;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Shuffles each class with the seed and deals it round-robin over the folds, so
// per-fold class counts differ by at most one. Index lists come back sorted.
inline std::vector<Split> stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::kInvalidArgument, "k-fold needs k >= 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.size() < k || neg.size() < k) {
    throw Error(ErrorKind::kTooFewPerClass, std::to_string(pos.size()) + " positives and " +
                                                std::to_string(neg.size()) + " negatives for " + std::to_string(k) +
                                                " folds");
  }
  Rng rng(derive_seed(seed, 0x6b666f6c64ULL));
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<std::size_t> fold_of(labels.size());
  for (std::size_t i = 0; i < pos.size(); ++i) fold_of[pos[i]] = i % k;
  // Negatives continue the rotation so fold sizes stay balanced overall.
  for (std::size_t i = 0; i < neg.size(); ++i) fold_of[neg[i]] = (pos.size() + i) % k;
  std::vector<Split> folds(k);
  for (std::size_t f = 0; f < k; ++f) folds[f].name = "fold" + std::to_string(f);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].test : folds[f].train).push_back(i);
  }
  return folds;
}

// One split per city, cities in lexicographic order.
inline std::vector<Split> leave_one_city_out(const std::vector<std::string>& cities) {
  std::map<std::string, std::vector<std::size_t>> by_city;
  for (std::size_t i = 0; i < cities.size(); ++i) by_city[cities[i]].push_back(i);
  if (by_city.size() < 2) throw Error(ErrorKind::kSingleCity, "leave-one-city-out needs at least two cities");
  std::vector<Split> out;
  for (const auto& [city, members] : by_city) {
    Split s;
    s.name = city;
    s.test = members;
    for (std::size_t i = 0; i < cities.size(); ++i) {
      if (cities[i] != city) s.train.push_back(i);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Stratified holdout used for inner validation: a `fraction` share of each class
// (at least one) goes to the second list.
inline Split stratified_holdout(const std::vector<int>& labels, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  Rng rng(derive_seed(seed, 0x686f6c64ULL));
  rng.shuffle(pos);
  rng.shuffle(neg);
  Split s;
  s.name = "holdout";
  for (auto* group : {&pos, &neg}) {
    std::size_t take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(group->size())));
    if (group->size() >= 2) take = std::clamp<std::size_t>(take, 1, group->size() - 1);
    else take = 0;
    s.test.insert(s.test.end(), group->begin(), group->begin() + static_cast<long>(take));
    s.train.insert(s.train.end(), group->begin() + static_cast<long>(take), group->end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace qsbd::eval
