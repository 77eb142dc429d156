#include <stdio.h>

int main(void) {
    int numerator = 100;
    int denominator = 4;
    printf("%d\n", numerator / denominator);
    return 0;
}
