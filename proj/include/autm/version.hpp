#pragma once

#define AUTM_VERSION "0.1.0"
