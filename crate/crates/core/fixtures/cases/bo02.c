#include <stdio.h>
#include <string.h>

int main(void) {
    char destination[10];
    const char *source = "0123456789ABCDEF";
    strcpy(destination, source);
    printf("%s\n", destination);
    return 0;
}
