#pragma once

#include "shape4d/complexity.hpp"
#include "shape4d/constellation.hpp"
#include "shape4d/constellation_file.hpp"
#include "shape4d/fiber/link.hpp"
#include "shape4d/fiber/params.hpp"
#include "shape4d/fiber/propagation.hpp"
#include "shape4d/fiber/receiver.hpp"
#include "shape4d/fiber/waveform.hpp"
#include "shape4d/formats.hpp"
#include "shape4d/gmi.hpp"
#include "shape4d/io.hpp"
#include "shape4d/metrics.hpp"
#include "shape4d/optimizer.hpp"
#include "shape4d/shaping.hpp"
