#pragma once

#include <map>
#include <string>

#include "proxyad/nets.hpp"

namespace proxyad {

using MetaMap = std::map<std::string, std::string>;

// Checkpoint layout: a text header (version, network specs, caller metadata
// as key=value lines) followed by flat binary weight blobs in declaration
// order. Round trips are bit-exact.

void save_pem_checkpoint(const std::string& path, const ProxyExtractionModule& pem,
                         const MetaMap& meta = {});

struct PemCheckpoint {
  ProxyExtractionModule pem;
  MetaMap meta;
};
PemCheckpoint load_pem_checkpoint(const std::string& path);

void save_irm_checkpoint(const std::string& path, const ImageReconstructionModule& irm,
                         const Discriminator& disc, const MetaMap& meta = {});

struct IrmCheckpoint {
  ImageReconstructionModule irm;
  Discriminator disc;
  MetaMap meta;
};
IrmCheckpoint load_irm_checkpoint(const std::string& path);

}  // namespace proxyad
