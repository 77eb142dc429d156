#include <stdio.h>

static int scale(int value, int divisor) {
    return value / divisor;
}

int main(void) {
    int divisor = 0;
    printf("%d\n", scale(100, divisor));
    return 0;
}
