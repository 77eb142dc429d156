#include <iostream>
using namespace std;

void f1() {
    int denominator = 0;
    if (denominator != 0) {
        int result = (100/denominator);
        cout << result << endl;
    } else {
        cout << "denominator is zero" << endl;
    }
}

int main(int argc, char * argv[]) {
    f1();
    return 0;
}
