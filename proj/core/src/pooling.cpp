#include "dfscope/pooling.hpp"

namespace dfscope {

PoolingObservation apply_pooling(const FeatureMapShape& ofmap, const PoolSpec& pool) {
  const FeatureMapShape pooled = pooled_shape(ofmap, pool);
  PoolingObservation obs;
  obs.gb_output_writes = static_cast<uint64_t>(ofmap.elements());
  obs.dram_writes = static_cast<uint64_t>(pooled.elements());
  obs.output_shape = pooled;
  return obs;
}

}  // namespace dfscope
